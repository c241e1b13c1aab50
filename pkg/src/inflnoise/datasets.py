"""Training-set builders for the noise experiments.

* correct/noisy split of an annotated corpus
* cumulative noise partitions (correct-only, then one tenth of the noise at a time)
* add-one-in sets: correct data plus every pair of one flag combination
* UniMorph controls that swap the correct pairs for dictionary pairs with the
  same MSDs and the same evaluation-lemma overlap

Every builder is a pure function of its inputs and an integer seed.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .annotator import combo_label, parse_combo
from .corpus import MSD, ParseError

log = logging.getLogger(__name__)

__all__ = [
    "Sample",
    "Dataset",
    "PartitionPlan",
    "ResampleError",
    "split_correct_noisy",
    "partition_noise",
    "cumulative_datasets",
    "add_one_in",
    "resample_unimorph",
    "length_matched_resample",
    "write_dataset",
    "read_dataset",
]


@dataclass(frozen=True)
class Sample:
    source: str
    target: str
    msd: MSD
    provenance: str = "correct"  # "correct", a flag combination such as "POS+SLOT", or "resampled"
    lemma: Optional[str] = None

    def __post_init__(self):
        if not self.source or not self.target or not self.provenance:
            raise ValueError("dataset samples need non-empty fields")

    @property
    def flags(self) -> frozenset:
        if self.provenance in ("correct", "resampled"):
            return frozenset()
        return parse_combo(self.provenance)

    @property
    def lemma_or_source(self) -> str:
        return self.lemma or self.source


@dataclass
class Dataset:
    name: str
    samples: list
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class PartitionPlan:
    k: int
    seed: int
    assignment: tuple  # noisy sample index -> partition index

    def sizes(self) -> list:
        counts = Counter(self.assignment)
        return [counts.get(i, 0) for i in range(self.k)]

    def members(self, part: int) -> list:
        return [i for i, p in enumerate(self.assignment) if p == part]


class ResampleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Noise experiments


def split_correct_noisy(pairs, name: str = "corpus", seed: int = 0):
    """Split annotated pairs into correct and noisy datasets; filtered pairs are dropped."""
    correct, noisy = [], []
    for p in pairs:
        ann = p.annotation
        if ann is None:
            raise ValueError(f"pair {p.source}->{p.target} is not annotated")
        if ann.status == "filtered":
            continue
        if ann.status == "correct":
            correct.append(Sample(p.source, p.target, p.predicted_msd, "correct", p.lemma))
        else:
            noisy.append(Sample(p.source, p.target, p.predicted_msd, combo_label(ann.flags), p.lemma))
    return Dataset(f"{name}.correct", correct, seed), Dataset(f"{name}.noisy", noisy, seed)


def partition_noise(noisy, k: int = 10, seed: int = 0) -> PartitionPlan:
    """Shuffle the noisy samples under ``seed`` and deal them round-robin into ``k`` parts.

    With fewer samples than parts, some parts are empty.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(noisy)
    order = np.random.default_rng(seed).permutation(n)
    assignment = [0] * n
    for rank, idx in enumerate(order):
        assignment[int(idx)] = rank % k
    return PartitionPlan(k, seed, tuple(assignment))


def cumulative_datasets(correct: Dataset, noisy: Dataset, plan: PartitionPlan, name: Optional[str] = None) -> list:
    """``D_0 = correct``; ``D_i`` adds partition ``i`` (noisy order kept within a part)."""
    if len(plan.assignment) != len(noisy):
        raise ValueError("plan does not match the noisy dataset")
    base = name or correct.name.rsplit(".", 1)[0]
    out = [Dataset(f"{base}.cum0of{plan.k}.s{plan.seed}", list(correct.samples), plan.seed, {"partition": 0, "k": plan.k})]
    samples = list(correct.samples)
    for part in range(plan.k):
        samples = samples + [noisy.samples[i] for i in plan.members(part)]
        out.append(Dataset(f"{base}.cum{part + 1}of{plan.k}.s{plan.seed}", samples, plan.seed, {"partition": part + 1, "k": plan.k}))
    return out


def add_one_in(correct: Dataset, noisy: Dataset, name: Optional[str] = None) -> dict:
    """One dataset per distinct flag combination: correct data plus exactly that combination."""
    base = name or correct.name.rsplit(".", 1)[0]
    groups = defaultdict(list)
    for s in noisy.samples:
        groups[s.provenance].append(s)
    out = {}
    for label in sorted(groups, key=lambda lab: (len(parse_combo(lab)), lab)):
        combo = parse_combo(label)
        out[combo] = Dataset(
            f"{base}.addone.{label}",
            list(correct.samples) + groups[label],
            correct.seed,
            {"combination": label, "added": len(groups[label])},
        )
    return out


# ---------------------------------------------------------------------------
# UniMorph controls


def _overlap_targets(correct, table, eval_lemmas):
    """Decide per MSD how many draws come from eval-overlapping lemmas."""
    need = defaultdict(lambda: [0, 0])  # msd -> [overlapping, total]
    for s in correct:
        need[s.msd][1] += 1
        if s.lemma_or_source in eval_lemmas:
            need[s.msd][0] += 1
    rows = defaultdict(lambda: ([], []))  # msd -> (overlapping rows, other rows)
    for row in table:
        rows[row.msd][0 if row.lemma in eval_lemmas else 1].append(row)
    missing = sorted((str(m) for m in need if not (rows[m][0] or rows[m][1])))
    if missing:
        raise ResampleError(f"no table entries for MSD {missing[0]}" + (f" (+{len(missing) - 1} more)" if len(missing) > 1 else ""))

    required = sum(o for o, _ in need.values())
    msds = sorted(need, key=str)
    bounds = {}
    chosen = {}
    for m in msds:
        o, c = need[m]
        lo = 0 if rows[m][1] else c
        hi = c if rows[m][0] else 0
        bounds[m] = (lo, hi)
        chosen[m] = min(max(o, lo), hi)
    # Shift the surplus/deficit onto MSDs with slack, in canonical order.
    diff = required - sum(chosen.values())
    for m in msds:
        if diff == 0:
            break
        lo, hi = bounds[m]
        step = min(diff, hi - chosen[m]) if diff > 0 else max(diff, lo - chosen[m])
        chosen[m] += step
        diff -= step
    achieved = sum(chosen.values())
    return chosen, rows, required, achieved


def _draw(pool, count, rng, desired_lengths=None, report=None):
    """Draw ``count`` rows: without replacement while supplies last, then with replacement.

    With ``desired_lengths`` each draw prefers rows whose target length matches
    (unused rows of the exact length first, then the nearest length).
    """
    order = [pool[int(i)] for i in rng.permutation(len(pool))]
    unused = list(order)
    picks = []
    for k in range(count):
        want = desired_lengths[k] if desired_lengths is not None else None
        candidates = unused if unused else order
        if not unused and report is not None:
            report["with_replacement"] = report.get("with_replacement", 0) + 1
        if want is None:
            row = candidates[0] if unused else candidates[int(rng.integers(len(candidates)))]
        else:
            best = min(abs(len(r.target) - want) for r in candidates)
            exact = [r for r in candidates if abs(len(r.target) - want) == best]
            row = exact[0] if unused else exact[int(rng.integers(len(exact)))]
            if best and report is not None:
                report["length_deviations"] = report.get("length_deviations", 0) + 1
        if unused:
            unused.remove(row)
        picks.append(row)
    return picks


def _resample(correct: Dataset, table, eval_set, seed: int, match_length: bool) -> Dataset:
    samples = list(correct.samples)
    kind = "unimorph-length" if match_length else "unimorph"
    name = f"{correct.name.rsplit('.', 1)[0]}.{kind}.s{seed}"
    if not samples:
        return Dataset(name, [], seed, {"required_overlap": 0, "achieved_overlap": 0})
    eval_lemmas = {e.lemma for e in eval_set}
    chosen, rows, required, achieved = _overlap_targets(samples, table, eval_lemmas)
    if achieved != required:
        log.warning("lemma overlap %d requested, %d achievable", required, achieved)
    rng = np.random.default_rng(seed)
    report: dict = {}
    by_msd = defaultdict(list)
    for i, s in enumerate(samples):
        by_msd[s.msd].append(i)
    out = [None] * len(samples)
    for m in sorted(by_msd, key=str):
        idxs = by_msd[m]
        n_over = chosen[m]
        # Originally overlapping positions take the overlapping draws first.
        ranked = sorted(idxs, key=lambda i: (samples[i].lemma_or_source not in eval_lemmas, i))
        over_idx, other_idx = ranked[:n_over], ranked[n_over:]
        for group, pool in ((over_idx, rows[m][0]), (other_idx, rows[m][1])):
            if not group:
                continue
            lengths = [len(samples[i].target) for i in group] if match_length else None
            picks = _draw(pool, len(group), rng, lengths, report)
            for i, row in zip(group, picks):
                out[i] = Sample(row.lemma, row.target, row.msd, "resampled", row.lemma)
    if report.get("with_replacement"):
        log.warning("%d draws reused table rows", report["with_replacement"])
    if report.get("length_deviations"):
        log.warning("%d draws fell back to the nearest length", report["length_deviations"])
    meta = {"required_overlap": required, "achieved_overlap": achieved, **report}
    return Dataset(name, out, seed, meta)


def resample_unimorph(correct: Dataset, table, eval_set, seed: int = 0) -> Dataset:
    """Replace every correct pair by a dictionary pair with the same MSD.

    The number of samples whose lemma is an evaluation lemma is kept equal to
    the original count where the table allows it (see ``metadata``).
    """
    return _resample(correct, table, eval_set, seed, match_length=False)


def length_matched_resample(correct: Dataset, table, eval_set, seed: int = 0) -> Dataset:
    """As :func:`resample_unimorph`, also matching each target's length where possible."""
    return _resample(correct, table, eval_set, seed, match_length=True)


# ---------------------------------------------------------------------------
# Files


def write_dataset(path, dataset: Dataset, manifest: bool = True) -> None:
    """``source \\t target \\t msd \\t provenance[\\t lemma]``; JSON manifest alongside."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.samples:
            line = f"{s.source}\t{s.target}\t{s.msd}\t{s.provenance}"
            if s.lemma and s.lemma != s.source:
                line += f"\t{s.lemma}"
            fh.write(line + "\n")
    if manifest:
        meta = {"name": dataset.name, "seed": dataset.seed, "size": len(dataset), **dataset.metadata}
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_dataset(path, name: Optional[str] = None) -> Dataset:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in (4, 5):
                raise ParseError(f"expected 4 or 5 fields, got {len(fields)}", lineno, path)
            lemma = fields[4] if len(fields) == 5 else None
            try:
                samples.append(Sample(fields[0], fields[1], MSD.parse(fields[2]), fields[3], lemma))
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
    meta = {}
    try:
        with open(str(path) + ".json", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    return Dataset(name or meta.get("name", str(path)), samples, int(meta.get("seed", 0)), meta)
