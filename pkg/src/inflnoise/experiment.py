"""Experiment runner: corpus preparation, dataset grid, resumable training cells.

A run directory holds::

    plan.json        every cell of the grid, in canonical order
    datasets/        one TSV (plus JSON manifest) per training set
    datasets.csv     name, source, partition, size, added
    manifest.jsonl   one line per finished cell (ok or failed)
    predictions/     per-cell greedy predictions on the evaluation set
    results.csv      one row per successful cell, canonical order
    failures.csv     cells that raised, with the error text
    summary.csv      mean and sample std over seeds per (model, dataset, pretrained)

Cells already recorded as ``ok`` in the manifest are skipped on a rerun.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .annotator import (
    AnnotationResources,
    annotate_corpus,
    annotation_distribution,
    combo_label,
    write_annotated,
    write_stats,
)
from .cmlm import MaskPolicy, default_pretrain_config, pretrain_then_finetune
from .corpus import (
    ensure_dir,
    parse_analyses,
    parse_lexicon,
    parse_pairs,
    parse_unimorph,
    parse_valid_pos,
)
from .datasets import (
    Dataset,
    add_one_in,
    cumulative_datasets,
    length_matched_resample,
    partition_noise,
    read_dataset,
    resample_unimorph,
    split_correct_noisy,
    write_dataset,
)
from .evaluation import aggregate, exact_match
from .fixture import FixtureSpec, gen_fixture
from .neural import MODEL_KINDS, TrainConfig, predict
from .slotmap import build_graph, max_matching, write_mapping
from .tagmap import load_tagmap, map_analysis_set

log = logging.getLogger(__name__)

__all__ = [
    "EXPERIMENT_KINDS",
    "DEFAULT_SEEDS",
    "RESULT_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "Cell",
    "load_resources",
    "prepare_corpus",
    "build_datasets",
    "plan_cells",
    "run_experiment",
    "read_results",
]

EXPERIMENT_KINDS = ("full", "noise-quantity", "noise-type", "cmlm-compare")
SOURCES = ("tumpc", "unimorph", "unimorph-length")
DEFAULT_SEEDS = (13, 21, 34, 55, 89)
RESULT_COLUMNS = ["language", "model", "dataset", "partition", "pretrained", "seed", "accuracy", "seconds"]
SUMMARY_COLUMNS = ["language", "model", "dataset", "source", "partition", "pretrained", "n", "mean", "std"]
DATA_KEYS = ("pairs", "analyses", "lexicon", "tagmap", "rewrites", "valid_pos", "eval", "unimorph")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    out: Path
    language: str = "fixture"
    models: tuple = MODEL_KINDS
    seeds: tuple = DEFAULT_SEEDS
    data: dict = field(default_factory=dict)  # DATA_KEYS -> path
    fixture: Optional[dict] = None  # FixtureSpec fields; generates data under out/fixture
    sources: tuple = ("tumpc",)
    k: int = 10
    partition_seed: int = 0
    resample_seed: int = 0
    partitions: Optional[tuple] = None  # subset of 0..k to train on
    pretrained: Optional[tuple] = None  # defaults to (False, True) for cmlm-compare, else (False,)
    train: TrainConfig = field(default_factory=TrainConfig)
    pretrain_epochs: int = 40
    mask_prob: float = 0.2
    lowercase: bool = False

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        self.models = tuple(self.models)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.sources = tuple(self.sources)
        bad = [m for m in self.models if m not in MODEL_KINDS]
        if bad or not self.models:
            raise ConfigError(f"unknown model kinds {bad}; expected some of {MODEL_KINDS}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be non-empty and distinct")
        bad = [s for s in self.sources if s not in SOURCES]
        if bad or not self.sources:
            raise ConfigError(f"unknown sources {bad}; expected some of {SOURCES}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.partitions is not None:
            self.partitions = tuple(sorted(set(int(p) for p in self.partitions)))
            if any(not 0 <= p <= self.k for p in self.partitions):
                raise ConfigError(f"partitions must lie in 0..{self.k}")
        if self.pretrained is None:
            self.pretrained = (False, True) if self.kind == "cmlm-compare" else (False,)
        self.pretrained = tuple(bool(p) for p in self.pretrained)
        if self.pretrain_epochs < 0:
            raise ConfigError("pretrain_epochs must be >= 0")
        if self.fixture is None and not self.data:
            raise ConfigError("config needs either 'data' paths or a 'fixture' spec")
        if self.fixture is None:
            for key in ("pairs", "analyses", "lexicon", "tagmap", "valid_pos", "eval"):
                if key not in self.data:
                    raise ConfigError(f"missing data path {key!r}")
            if set(self.sources) - {"tumpc"} and "unimorph" not in self.data:
                raise ConfigError("resampled sources need a 'unimorph' table")
            for key, path in self.data.items():
                if key not in DATA_KEYS:
                    raise ConfigError(f"unknown data key {key!r}")
                if not Path(path).is_file():
                    raise ConfigError(f"{key} file not found: {path}")
        else:
            FixtureSpec.from_dict(self.fixture)

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "ExperimentConfig":
        d = dict(d)
        known = {"kind", "out", "language", "models", "seeds", "data", "fixture", "sources", "k",
                 "partition_seed", "resample_seed", "partitions", "pretrained", "train",
                 "pretrain_epochs", "mask_prob", "lowercase"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("config needs a 'kind'")
        d["out"] = base / d.get("out", "results")
        d["data"] = {k: str(base / v) for k, v in d.get("data", {}).items()}
        try:
            d["train"] = TrainConfig.from_dict(d.get("train", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad training config: {exc}") from None
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls.from_dict(doc, path.parent)

    def to_json(self) -> dict:
        d = asdict(self)
        d["out"] = str(self.out)
        d["train"] = asdict(self.train)
        for key in ("models", "seeds", "sources", "partitions", "pretrained"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class Cell:
    model: str
    dataset: str
    source: str
    partition: str
    pretrained: bool
    seed: int

    @property
    def key(self) -> str:
        return f"{self.model}|{self.dataset}|{int(self.pretrained)}|{self.seed}"

    @property
    def slug(self) -> str:
        pt = "pt" if self.pretrained else "np"
        return f"{self.dataset}.{self.model}.{pt}.s{self.seed}"


# ---------------------------------------------------------------------------
# Corpus preparation


def load_resources(data: dict, lowercase: bool = False):
    """Parse the annotation inputs; returns ``(pairs, AnnotationResources)``.

    ``lowercase`` folds every surface form before lexicon and analyzer lookup.
    """
    pairs = parse_pairs(data["pairs"], lowercase)
    tagmap = load_tagmap(data["tagmap"], data.get("rewrites"))
    res = AnnotationResources(
        lexicon=parse_lexicon(data["lexicon"], lowercase) if data.get("lexicon") else set(),
        analyses=parse_analyses(data["analyses"], lowercase),
        valid_pos=parse_valid_pos(data["valid_pos"]) if data.get("valid_pos") else set(),
        tagmap=tagmap,
    )
    return pairs, res


def gold_msds(res: AnnotationResources) -> dict:
    return {surface: map_analysis_set(aset, res.tagmap)[0] for surface, aset in res.analyses.items()}


def prepare_corpus(pairs, res: AnnotationResources):
    """Map slots, then annotate every pair in place.  Returns the slot mapping."""
    mapping = max_matching(build_graph(pairs, gold_msds(res)))
    res.slot_mapping = mapping
    annotate_corpus(pairs, res)
    return mapping


def build_datasets(cfg: ExperimentConfig, pairs, data: dict) -> list:
    """Every training set of the grid as ``(source, partition label, Dataset)``."""
    base = f"{cfg.language}"
    correct, noisy = split_correct_noisy(pairs, base, cfg.partition_seed)
    eval_set = parse_unimorph(data["eval"])
    table = parse_unimorph(data["unimorph"]) if "unimorph" in data else None
    out = []
    for source in cfg.sources:
        name = f"{base}.{source}"
        if source == "tumpc":
            clean = Dataset(f"{name}.correct", correct.samples, correct.seed)
        elif source == "unimorph":
            clean = resample_unimorph(correct, table, eval_set, cfg.resample_seed)
        else:
            clean = length_matched_resample(correct, table, eval_set, cfg.resample_seed)
        if cfg.kind == "full":
            ds = Dataset(f"{name}.full", clean.samples + noisy.samples, cfg.partition_seed)
            out.append((source, "full", ds))
        elif cfg.kind in ("noise-quantity", "cmlm-compare"):
            plan = partition_noise(noisy, cfg.k, cfg.partition_seed)
            for i, ds in enumerate(cumulative_datasets(clean, noisy, plan, name)):
                if cfg.partitions is None or i in cfg.partitions:
                    out.append((source, str(i), ds))
        else:
            out.append((source, "C", Dataset(f"{name}.addone.C", list(clean.samples), clean.seed, {"combination": "C", "added": 0})))
            for combo, ds in add_one_in(clean, noisy, name).items():
                out.append((source, combo_label(combo), ds))
    return out


def plan_cells(cfg: ExperimentConfig, datasets) -> list:
    cells = []
    for source, part, ds in datasets:
        for model in cfg.models:
            for pretrained in cfg.pretrained:
                for seed in cfg.seeds:
                    cells.append(Cell(model, ds.name, source, part, pretrained, seed))
    return cells


# ---------------------------------------------------------------------------
# Cells


def _run_cell(cell: Cell, dataset_path: str, eval_path: str, train_cfg: dict, pretrain_epochs: int, mask_prob: float):
    """Train and evaluate one cell (runs in a worker process)."""
    start = time.perf_counter()
    dataset = read_dataset(dataset_path)
    eval_set = parse_unimorph(eval_path)
    config = TrainConfig.from_dict(train_cfg).replace(seed=cell.seed)
    epochs = pretrain_epochs if cell.pretrained else 0
    pre_config = default_pretrain_config(cell.model, config, epochs)
    inflector, _, _ = pretrain_then_finetune(cell.model, dataset, pre_config, config, MaskPolicy(mask_prob=mask_prob))
    predictions = predict(inflector, eval_set)
    accuracy = exact_match(predictions, [e.target for e in eval_set])
    return {
        "accuracy": accuracy,
        "seconds": time.perf_counter() - start,
        "predictions": [(e.lemma, str(e.msd), p, e.target) for e, p in zip(eval_set, predictions)],
    }


def _read_manifest(path: Path) -> dict:
    done = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                done[rec["key"]] = rec
    return done


def _write_predictions(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lemma, msd, pred, gold in rows:
            fh.write(f"{lemma}\t{msd}\t{pred}\t{gold}\n")


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Run every missing cell and rewrite the result tables.

    Returns counts: ``{"cells", "ran", "skipped", "failed"}``.
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    out = ensure_dir(cfg.out)
    data = dict(cfg.data)
    if cfg.fixture is not None:
        paths = gen_fixture(FixtureSpec.from_dict(cfg.fixture), out / "fixture")
        data = {k: str(paths[k]) for k in DATA_KEYS}

    pairs, res = load_resources(data, cfg.lowercase)
    mapping = prepare_corpus(pairs, res)
    ensure_dir(out / "corpus")
    write_mapping(out / "corpus" / "slots.tsv", mapping)
    write_annotated(out / "corpus" / "annotated.tsv", pairs)
    write_stats(out / "corpus" / "stats.json", annotation_distribution([p.annotation for p in pairs]))

    datasets = build_datasets(cfg, pairs, data)
    ds_dir = ensure_dir(out / "datasets")
    ds_path = {}
    with open(out / "datasets.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["language", "dataset", "source", "partition", "size", "added"])
        for source, part, ds in datasets:
            path = ds_dir / f"{ds.name}.tsv"
            write_dataset(path, ds)
            ds_path[ds.name] = str(path)
            writer.writerow([cfg.language, ds.name, source, part, len(ds), ds.metadata.get("added", "")])

    cells = plan_cells(cfg, datasets)
    with open(out / "plan.json", "w", encoding="utf-8") as fh:
        plan_cfg = {k: v for k, v in cfg.to_json().items() if k != "out"}
        json.dump({"config": plan_cfg, "cells": [asdict(c) for c in cells]}, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest_path = out / "manifest.jsonl"
    done = _read_manifest(manifest_path)
    todo = [c for c in cells if done.get(c.key, {}).get("status") != "ok"]
    skipped = len(cells) - len(todo)
    pred_dir = ensure_dir(out / "predictions")
    train_cfg = asdict(cfg.train)

    def record(cell, result, error):
        rec = {"key": cell.key, **asdict(cell)}
        if error is None:
            rec.update(status="ok", accuracy=result["accuracy"], seconds=result["seconds"])
            _write_predictions(pred_dir / f"{cell.slug}.tsv", result["predictions"])
        else:
            rec.update(status="failed", error=error)
            log.error("cell %s failed: %s", cell.key, error)
        done[cell.key] = rec
        with open(manifest_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    args = [(c, ds_path[c.dataset], data["eval"], train_cfg, cfg.pretrain_epochs, cfg.mask_prob) for c in todo]
    if jobs == 1:
        for a in args:
            try:
                record(a[0], _run_cell(*a), None)
            except Exception as exc:  # a failing cell must not stop the grid
                record(a[0], None, f"{type(exc).__name__}: {exc}")
    elif args:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            futures = [(a[0], pool.submit(_run_cell, *a)) for a in args]
            for cell, fut in futures:
                try:
                    record(cell, fut.result(), None)
                except Exception as exc:
                    record(cell, None, f"{type(exc).__name__}: {exc}")

    failed = _write_tables(out, cfg, cells, done)
    return {"cells": len(cells), "ran": len(todo), "skipped": skipped, "failed": failed}


def _write_tables(out: Path, cfg: ExperimentConfig, cells, done) -> int:
    failed = 0
    groups = {}
    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh, \
            open(out / "failures.csv", "w", newline="", encoding="utf-8") as fail_fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        fail_writer = csv.writer(fail_fh, lineterminator="\n")
        fail_writer.writerow(["model", "dataset", "pretrained", "seed", "error"])
        for c in cells:
            rec = done.get(c.key)
            if rec is None:
                continue
            if rec["status"] != "ok":
                failed += 1
                fail_writer.writerow([c.model, c.dataset, int(c.pretrained), c.seed, rec["error"]])
                continue
            writer.writerow([cfg.language, c.model, c.dataset, c.partition, int(c.pretrained), c.seed,
                             repr(rec["accuracy"]), f"{rec['seconds']:.3f}"])
            groups.setdefault((c.model, c.dataset, c.source, c.partition, c.pretrained), []).append(rec["accuracy"])
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for (model, dataset, source, part, pretrained), accs in groups.items():
            mean, std = aggregate(accs)
            writer.writerow([cfg.language, model, dataset, source, part, int(pretrained), len(accs),
                             repr(mean), "NA" if std is None else repr(std)])
    return failed


def read_results(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
