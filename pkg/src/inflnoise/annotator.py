"""Five-way noise annotation of inflection pairs.

Flags:

* ``LEX``      a word is absent from every lexicon resource
* ``POS``      a word has no analysis with an inflecting part of speech
* ``POS_PAIR`` source and target share no part of speech
* ``PDGM``     they share a part of speech but no (lemma, POS)
* ``SLOT``     the MSD predicted for the target is not among its gold MSDs

Pairs that cannot be decided end up filtered instead.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .corpus import MSD, AnalysisSet, InflectionPair, ParseError, pos_class
from .slotmap import UNMATCHED_SLOT, SlotMapping, apply_mapping
from .tagmap import TagMap, map_analysis_set

__all__ = [
    "NoiseFlag",
    "AnnotationResult",
    "AnnotationResources",
    "UNANNOTATABLE",
    "UNMAPPABLE",
    "UNMATCHED_SLOT",
    "detect_lexicon_noise",
    "detect_pos_noise",
    "detect_pos_pair_noise",
    "detect_paradigm_noise",
    "detect_slot_noise",
    "annotate_pair",
    "annotate_corpus",
    "primary_label",
    "annotation_distribution",
    "overlap_stats",
    "combo_label",
    "parse_combo",
    "write_annotated",
    "read_annotated",
]

UNANNOTATABLE = "UNANNOTATABLE"
UNMAPPABLE = "UNMAPPABLE"
FILTER_REASONS = (UNANNOTATABLE, UNMAPPABLE, UNMATCHED_SLOT)


class NoiseFlag(enum.Enum):
    LEX = "LEX"
    POS = "POS"
    POS_PAIR = "POS_PAIR"
    PDGM = "PDGM"
    SLOT = "SLOT"

    def __str__(self):
        return self.value


FLAG_ORDER = tuple(NoiseFlag)
# Display precedence when a noisy pair needs a single label.
PRIMARY_PRIORITY = (NoiseFlag.LEX, NoiseFlag.POS, NoiseFlag.POS_PAIR, NoiseFlag.PDGM, NoiseFlag.SLOT)


def combo_label(flags) -> str:
    """Canonical text of a flag combination, e.g. ``POS+SLOT``."""
    return "+".join(f.value for f in FLAG_ORDER if f in flags)


def parse_combo(text: str) -> frozenset:
    return frozenset(NoiseFlag(t) for t in text.replace(",", "+").split("+") if t)


@dataclass(frozen=True)
class AnnotationResult:
    status: str  # "correct" | "noisy" | "filtered"
    flags: frozenset = frozenset()
    reason: Optional[str] = None

    def __post_init__(self):
        if self.status == "noisy" and not self.flags:
            raise ValueError("a noisy result needs at least one flag")
        if self.status != "noisy" and self.flags:
            raise ValueError("only noisy results carry flags")
        if (self.status == "filtered") != (self.reason is not None):
            raise ValueError("filtered results (and only those) carry a reason")

    @classmethod
    def correct(cls):
        return cls("correct")

    @classmethod
    def noisy(cls, flags):
        return cls("noisy", frozenset(flags))

    @classmethod
    def filtered(cls, reason):
        return cls("filtered", reason=reason)

    @property
    def label(self) -> str:
        if self.status == "noisy":
            return combo_label(self.flags)
        return "C" if self.status == "correct" else self.reason


@dataclass
class AnnotationResources:
    lexicon: set
    analyses: dict
    valid_pos: set
    tagmap: TagMap
    slot_mapping: Optional[SlotMapping] = None

    def analyses_of(self, surface) -> AnalysisSet:
        return self.analyses.get(surface) or AnalysisSet(surface)


# ---------------------------------------------------------------------------
# Detectors


def detect_lexicon_noise(word: str, lexicon) -> Optional[NoiseFlag]:
    return None if word in lexicon else NoiseFlag.LEX


def _valid(pos_tag_class: str, raw: str, valid_pos) -> bool:
    return pos_tag_class in valid_pos or raw in valid_pos


def detect_pos_noise(aset: AnalysisSet, valid_pos) -> Optional[NoiseFlag]:
    """POS if no analysis carries an inflecting POS.  Empty sets are undecided (None)."""
    if aset.unanalyzable:
        return None
    if any(_valid(pos_class(a.pos), a.pos, valid_pos) for a in aset.analyses):
        return None
    return NoiseFlag.POS


def detect_pos_pair_noise(src: AnalysisSet, tgt: AnalysisSet) -> Optional[NoiseFlag]:
    if src.unanalyzable or tgt.unanalyzable:
        return None
    return None if src.pos_classes() & tgt.pos_classes() else NoiseFlag.POS_PAIR


def detect_paradigm_noise(src: AnalysisSet, tgt: AnalysisSet) -> Optional[NoiseFlag]:
    if src.unanalyzable or tgt.unanalyzable:
        return None
    if not src.pos_classes() & tgt.pos_classes():
        return None  # that is POS-pair noise
    return None if src.lemma_pos() & tgt.lemma_pos() else NoiseFlag.PDGM


def detect_slot_noise(predicted: MSD, gold) -> Optional[NoiseFlag]:
    """SLOT iff ``predicted`` is not in the (non-empty) gold set."""
    if predicted is None or not gold:
        return None
    return None if predicted in gold else NoiseFlag.SLOT


# ---------------------------------------------------------------------------
# Pairs


def annotate_pair(pair: InflectionPair, res: AnnotationResources) -> AnnotationResult:
    if pair.predicted_msd is None:
        return AnnotationResult.filtered(UNMATCHED_SLOT)

    flags = set()
    for word in (pair.source, pair.target):
        if detect_lexicon_noise(word, res.lexicon):
            flags.add(NoiseFlag.LEX)

    src = res.analyses_of(pair.source)
    tgt = res.analyses_of(pair.target)
    for aset in (src, tgt):
        if detect_pos_noise(aset, res.valid_pos):
            flags.add(NoiseFlag.POS)
    for detector in (detect_pos_pair_noise, detect_paradigm_noise):
        flag = detector(src, tgt)
        if flag:
            flags.add(flag)

    unmappable = False
    for aset in (src, tgt):
        _, bad = map_analysis_set(aset, res.tagmap)
        unmappable |= bad > 0
    if not tgt.unanalyzable and not unmappable:
        gold, _ = map_analysis_set(tgt, res.tagmap)
        if detect_slot_noise(pair.predicted_msd, gold):
            flags.add(NoiseFlag.SLOT)

    if flags:
        return AnnotationResult.noisy(flags)
    if src.unanalyzable or tgt.unanalyzable:
        return AnnotationResult.filtered(UNANNOTATABLE)
    if unmappable:
        return AnnotationResult.filtered(UNMAPPABLE)
    return AnnotationResult.correct()


def shared_lemma(pair: InflectionPair, res: AnnotationResources) -> Optional[str]:
    """Lemma shared by both words (smallest in sort order), else the target's."""
    src = res.analyses_of(pair.source).lemma_pos()
    tgt = res.analyses_of(pair.target).lemma_pos()
    common = sorted(src & tgt)
    if common:
        return common[0][0]
    if tgt:
        return sorted(tgt)[0][0]
    return None


def annotate_corpus(pairs, res: AnnotationResources) -> list:
    """Annotate in place (input order preserved) and return the pairs.

    When ``res.slot_mapping`` is set it is applied first; otherwise pairs must
    already carry ``predicted_msd``.
    """
    if res.slot_mapping is not None:
        apply_mapping(pairs, res.slot_mapping)
    for pair in pairs:
        pair.annotation = annotate_pair(pair, res)
        pair.lemma = shared_lemma(pair, res)
    return pairs


# ---------------------------------------------------------------------------
# Corpus statistics


def primary_label(result: AnnotationResult) -> str:
    if result.status == "correct":
        return "C"
    if result.status == "filtered":
        return result.reason
    for flag in PRIMARY_PRIORITY:
        if flag in result.flags:
            return flag.value
    raise AssertionError("unreachable")


DISTRIBUTION_LABELS = ("C",) + tuple(f.value for f in PRIMARY_PRIORITY)


def annotation_distribution(results) -> dict:
    """Primary-label percentages over non-filtered pairs plus raw counts.

    ``results`` is an iterable of :class:`AnnotationResult` (or pairs carrying
    one).  Percentages are unrounded; the combination counts partition the
    noisy pairs.
    """
    results = [getattr(r, "annotation", r) for r in results]
    kept = [r for r in results if r.status != "filtered"]
    primary = Counter(primary_label(r) for r in kept)
    combos = Counter(combo_label(r.flags) for r in kept if r.status == "noisy")
    filtered = Counter(r.reason for r in results if r.status == "filtered")
    total = len(kept)
    percent = {lab: (100.0 * primary.get(lab, 0) / total if total else 0.0) for lab in DISTRIBUTION_LABELS}
    return {
        "total": len(results),
        "annotated": total,
        "percent": percent,
        "counts": {lab: primary.get(lab, 0) for lab in DISTRIBUTION_LABELS},
        "combinations": dict(sorted(combos.items())),
        "filtered": dict(sorted(filtered.items())),
    }


def overlap_stats(train, eval_set) -> dict:
    """Percent of eval lemma types, MSD types and tags attested in ``train``.

    ``train`` items need ``lemma`` (falling back to ``source``) and ``msd``;
    ``eval_set`` items are :class:`EvalInstance`.
    """
    eval_set = list(eval_set)
    if not eval_set:
        raise ValueError("empty evaluation set")
    train = list(train)
    train_lemmas = {getattr(s, "lemma", None) or s.source for s in train}
    train_msds = {s.msd for s in train}
    train_tags = {t for m in train_msds for t in m.tags}
    eval_lemmas = {e.lemma for e in eval_set}
    eval_msds = {e.msd for e in eval_set}
    eval_tags = {t for m in eval_msds for t in m.tags}

    def pct(attested, universe):
        return 100.0 * len(attested & universe) / len(universe)

    return {
        "lemma": pct(train_lemmas, eval_lemmas),
        "msd": pct(train_msds, eval_msds),
        "tag": pct(train_tags, eval_tags),
    }


# ---------------------------------------------------------------------------
# Files


def _status_text(result: AnnotationResult) -> str:
    if result.status == "filtered":
        return f"filtered:{result.reason}"
    return result.status


def write_annotated(path, pairs) -> None:
    """``source, target, slot, predicted_msd, status, flags, lemma`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            msd = str(p.predicted_msd) if p.predicted_msd is not None else ""
            flags = ",".join(f.value for f in FLAG_ORDER if f in p.annotation.flags)
            fh.write(f"{p.source}\t{p.target}\t{p.slot}\t{msd}\t{_status_text(p.annotation)}\t{flags}\t{p.lemma or ''}\n")


def read_annotated(path) -> list:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) == 6:
                fields.append("")
            if len(fields) != 7:
                raise ParseError(f"expected 6 or 7 fields, got {len(fields)}", lineno, path)
            source, target, slot, msd, status, flags, lemma = fields
            pair = InflectionPair(source, target, int(slot), MSD.parse(msd) if msd else None)
            if status.startswith("filtered:"):
                pair.annotation = AnnotationResult.filtered(status.split(":", 1)[1])
            elif status == "noisy":
                pair.annotation = AnnotationResult.noisy(parse_combo(flags))
            elif status == "correct":
                pair.annotation = AnnotationResult.correct()
            else:
                raise ParseError(f"unknown status {status!r}", lineno, path)
            pair.lemma = lemma or None
            pairs.append(pair)
    return pairs


def write_stats(path, stats: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
