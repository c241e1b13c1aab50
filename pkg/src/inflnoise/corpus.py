"""Domain types and readers/writers for every TSV format the toolkit consumes.

All files are UTF-8, tab separated, one record per line.  Surfaces are NFC
normalized on ingest; casing is preserved unless a reader is called with
``lowercase=True``.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

__all__ = [
    "ParseError",
    "normalize",
    "MSD",
    "Analysis",
    "AnalysisSet",
    "InflectionPair",
    "EvalInstance",
    "parse_pairs",
    "parse_unimorph",
    "parse_analyses",
    "parse_lexicon",
    "parse_valid_pos",
    "write_pairs",
    "write_unimorph",
    "write_analyses",
    "write_wordlist",
    "POS_CLASSES",
    "pos_class",
]


class ParseError(ValueError):
    """Malformed input line.  ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: Optional[int] = None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


def normalize(text: str, lowercase: bool = False) -> str:
    text = unicodedata.normalize("NFC", text)
    return text.lower() if lowercase else text


def _check_surface(surface: str, lineno=None, path=None) -> str:
    if not surface:
        raise ParseError("empty surface form", lineno, path)
    if "\t" in surface or "\n" in surface:
        raise ParseError(f"surface contains tab or newline: {surface!r}", lineno, path)
    return surface


# ---------------------------------------------------------------------------
# MSDs

# Canonical dimension order.  Tags not listed fall into "other" and sort
# alphabetically after every known dimension.
_DIMENSIONS = [
    ("pos", "N PROPN ADJ V V.PTCP V.CVB V.MSDR PRO NUM ADV ADP DET ART CONJ PART INTJ COMP CLF AUX"),
    ("mood", "IND SBJV IMP COND OPT POT PURP INF FIN NFIN REAL IRR INTEN OBLIG DEB PERM ADM LKLY QUOT"),
    ("tense", "PRS PST FUT RCT RMT HOD IMMED 1DAY"),
    ("aspect", "IPFV PFV PRF PROG HAB ITER PROSP DUR FREQ SEMEL"),
    ("voice", "ACT PASS MID ANTIP APPL CAUS RECP REFL DIR INV"),
    ("person", "0 1 2 3 4 INCL EXCL PRX OBV"),
    ("number", "SG PL DU TRI PAUC GRPL GPAUC"),
    ("gender", "MASC FEM NEUT NAKH BANTU1 BANTU2"),
    ("case", "NOM ACC GEN DAT INS ESS LOC ABL ALL VOC ERG ABS COM PRIV TRANS FRML PRT EQTV IN AT ON"),
    ("definiteness", "DEF INDF SPEC NSPEC"),
    ("comparison", "CMPR SPRL AB RL EQT"),
]
_DIM_RANK = {}
for _rank, (_name, _tags) in enumerate(_DIMENSIONS):
    for _pos_in_dim, _tag in enumerate(_tags.split()):
        _DIM_RANK[_tag] = (_rank, _pos_in_dim)
_OTHER_RANK = len(_DIMENSIONS)
POS_TAGS = frozenset(_DIMENSIONS[0][1].split())


def _tag_key(tag: str):
    rank = _DIM_RANK.get(tag)
    if rank is None:
        return (_OTHER_RANK, 0, tag)
    return (rank[0], rank[1], tag)


@dataclass(frozen=True, order=True)
class MSD:
    """A morpho-syntactic description: a POS tag plus ordered features.

    Build instances through :meth:`from_tags` or :meth:`parse` so features are
    deduplicated and put in canonical dimension order.  Equality is equality
    of the canonical rendering.
    """

    pos: str
    features: tuple = ()

    @classmethod
    def from_tags(cls, tags: Iterable[str]) -> "MSD":
        tags = list(dict.fromkeys(tags))
        if not tags:
            raise ValueError("an MSD needs at least one tag")
        for tag in tags:
            if not tag or ";" in tag or tag != tag.strip():
                raise ValueError(f"invalid tag {tag!r}")
        # POS tags rank first; without one, the smallest tag takes the slot.
        ordered = sorted(tags, key=_tag_key)
        return cls(ordered[0], tuple(ordered[1:]))

    @classmethod
    def parse(cls, text: str) -> "MSD":
        parts = text.strip().split(";")
        if any(p == "" for p in parts):
            raise ValueError(f"malformed MSD {text!r}")
        return cls.from_tags(parts)

    @property
    def tags(self) -> tuple:
        return (self.pos,) + self.features

    def __str__(self) -> str:
        return ";".join(self.tags)


# ---------------------------------------------------------------------------
# Analyses

# Coarse class of common analyzer POS tags, used to match the valid-POS
# tables ("verb", "noun", ...) and to compare parts of speech across words.
POS_CLASSES = {
    "vblex": "verb", "vbser": "verb", "vbhaver": "verb", "vbmod": "verb",
    "vbdo": "verb", "vaux": "verb",
    "n": "noun", "np": "noun",
    "adj": "adjective",
    "prn": "prn",
    "num": "numeral",
    "det": "determiner",
    "adv": "adverb", "preadv": "adverb",
    "pr": "preposition", "post": "postposition",
    "cnjcoo": "conjunction", "cnjsub": "conjunction", "cnjadv": "conjunction",
    "ij": "interjection",
    "part": "particle",
    "abbr": "abbreviation",
}


def pos_class(tag: str) -> str:
    return POS_CLASSES.get(tag, tag)


@dataclass(frozen=True, order=True)
class Analysis:
    lemma: str
    tags: tuple

    def __post_init__(self):
        if not self.tags:
            raise ValueError(f"analysis of {self.lemma!r} has no tags")

    @property
    def pos(self) -> str:
        return self.tags[0]

    def __str__(self) -> str:
        return self.lemma + "".join(f"<{t}>" for t in self.tags)


@dataclass(frozen=True)
class AnalysisSet:
    surface: str
    analyses: frozenset = frozenset()

    @property
    def unanalyzable(self) -> bool:
        return not self.analyses

    def pos_classes(self) -> set:
        return {pos_class(a.pos) for a in self.analyses}

    def lemma_pos(self) -> set:
        return {(a.lemma, pos_class(a.pos)) for a in self.analyses}


@dataclass
class InflectionPair:
    """One training pair produced by the paradigm-completion system.

    ``predicted_msd`` is filled by slot mapping, ``annotation`` by the
    annotator; both start empty.
    """

    source: str
    target: str
    slot: int
    predicted_msd: Optional[MSD] = None
    annotation: Optional[object] = None
    lemma: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("source and target must be non-empty")
        if self.slot < 0:
            raise ValueError(f"negative slot {self.slot}")


@dataclass(frozen=True)
class EvalInstance:
    lemma: str
    target: str
    msd: MSD


# ---------------------------------------------------------------------------
# Readers


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def parse_pairs(path, lowercase: bool = False) -> list:
    """Read ``source \\t target \\t slot`` lines."""
    pairs = []
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno, path)
        source, target, slot = fields
        if not re.fullmatch(r"[0-9]+", slot.strip()):
            raise ParseError(f"slot is not a non-negative integer: {slot!r}", lineno, path)
        source = _check_surface(normalize(source, lowercase), lineno, path)
        target = _check_surface(normalize(target, lowercase), lineno, path)
        pairs.append(InflectionPair(source, target, int(slot)))
    return pairs


def parse_unimorph(path, lowercase: bool = False) -> list:
    """Read ``lemma \\t form \\t MSD`` lines into :class:`EvalInstance`."""
    out = []
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno, path)
        lemma, form, msd = fields
        try:
            msd = MSD.parse(msd)
        except ValueError as exc:
            raise ParseError(str(exc), lineno, path) from None
        lemma = _check_surface(normalize(lemma, lowercase), lineno, path)
        form = _check_surface(normalize(form, lowercase), lineno, path)
        out.append(EvalInstance(lemma, form, msd))
    return out


_ANALYSIS_RE = re.compile(r"([^<>]+)((?:<[^<>]+>)+)")


def parse_analysis(item: str) -> Analysis:
    m = _ANALYSIS_RE.fullmatch(item.strip())
    if m is None:
        raise ValueError(f"malformed analysis {item!r}")
    lemma = normalize(m.group(1))
    tags = tuple(re.findall(r"<([^<>]+)>", m.group(2)))
    return Analysis(lemma, tags)


def parse_analyses(path, lowercase: bool = False) -> dict:
    """Read ``surface \\t lemma<t1><t2>;lemma<t1>...`` lines.

    An empty second field marks the surface as unanalyzable.  Repeated
    surfaces merge their analyses.
    """
    found: dict = {}
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) == 1:
            fields.append("")
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno, path)
        surface = _check_surface(normalize(fields[0], lowercase), lineno, path)
        items = found.setdefault(surface, set())
        if fields[1].strip():
            for item in fields[1].split(";"):
                try:
                    analysis = parse_analysis(item)
                except ValueError as exc:
                    raise ParseError(str(exc), lineno, path) from None
                if lowercase:
                    analysis = Analysis(analysis.lemma.lower(), analysis.tags)
                items.add(analysis)
    return {s: AnalysisSet(s, frozenset(a)) for s, a in found.items()}


def parse_lexicon(path, lowercase: bool = False) -> set:
    return {normalize(line.strip(), lowercase) for _, line in _lines(path)}


def parse_valid_pos(path) -> set:
    return {line.strip() for _, line in _lines(path)}


# ---------------------------------------------------------------------------
# Writers


def write_pairs(path, pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(f"{p.source}\t{p.target}\t{p.slot}\n")


def write_unimorph(path, instances) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(f"{inst.lemma}\t{inst.target}\t{inst.msd}\n")


def write_analyses(path, analyses) -> None:
    """Write a surface → AnalysisSet mapping, sorted by surface."""
    with open(path, "w", encoding="utf-8") as fh:
        for surface in sorted(analyses):
            items = ";".join(str(a) for a in sorted(analyses[surface].analyses))
            fh.write(f"{surface}\t{items}\n")


def write_wordlist(path, words) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for w in sorted(words):
            fh.write(f"{w}\n")


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
