"""Translate analyzer tag sequences into UniMorph MSDs.

Each analyzer tag maps to zero or more UniMorph tags.  After translation an
ordered list of rewrite rules patches language-specific mismatches (e.g. the
analyzer leaves person off imperatives while UniMorph marks it).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import MSD, Analysis, AnalysisSet, ParseError

__all__ = [
    "RewriteRule",
    "TagMap",
    "Unmappable",
    "map_analysis",
    "map_analysis_set",
    "load_tagmap",
    "load_rewrites",
    "write_tagmap",
    "write_rewrites",
]


@dataclass(frozen=True)
class RewriteRule:
    if_present: frozenset = frozenset()
    if_absent: frozenset = frozenset()
    add: frozenset = frozenset()
    remove: frozenset = frozenset()

    def __post_init__(self):
        for name in ("if_present", "if_absent", "add", "remove"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.add & self.remove:
            raise ValueError(f"rule adds and removes {sorted(self.add & self.remove)}")

    def matches(self, tags) -> bool:
        return self.if_present <= tags and not (self.if_absent & tags)

    def apply(self, tags: set) -> set:
        if not self.matches(tags):
            return tags
        return (tags - self.remove) | self.add

    def to_json(self) -> dict:
        return {k: sorted(getattr(self, k)) for k in ("if_present", "if_absent", "add", "remove")}


@dataclass(frozen=True)
class TagMap:
    entries: dict = field(default_factory=dict)
    rewrites: tuple = ()

    def __post_init__(self):
        for tag, um in self.entries.items():
            for t in um:
                if not t or ";" in t:
                    raise ValueError(f"analyzer tag {tag!r} maps to invalid tag {t!r}")
        object.__setattr__(self, "rewrites", tuple(self.rewrites))


@dataclass(frozen=True)
class Unmappable:
    """Result of mapping an analysis containing a tag absent from the table."""

    tag: str


def map_analysis(analysis: Analysis, tagmap: TagMap):
    """Return the canonical :class:`MSD` for ``analysis`` or :class:`Unmappable`."""
    tags = []
    for tag in analysis.tags:
        if tag not in tagmap.entries:
            return Unmappable(tag)
        tags.extend(tagmap.entries[tag])
    ordered = list(dict.fromkeys(tags))
    current = set(ordered)
    for rule in tagmap.rewrites:
        current = rule.apply(current)
    # Keep translation order for the POS choice; added tags go last.
    final = [t for t in ordered if t in current] + sorted(current - set(ordered))
    if not final:
        return Unmappable(analysis.tags[0])
    return MSD.from_tags(final)


def map_analysis_set(aset: AnalysisSet, tagmap: TagMap):
    """Map every analysis; returns ``(set of MSD, number of unmappable analyses)``."""
    msds = set()
    unmappable = 0
    for analysis in aset.analyses:
        result = map_analysis(analysis, tagmap)
        if isinstance(result, Unmappable):
            unmappable += 1
        else:
            msds.add(result)
    return msds, unmappable


# ---------------------------------------------------------------------------
# Files


def load_tagmap(path, rewrites_path=None) -> TagMap:
    """Read ``analyzer_tag \\t um_tag1[,um_tag2...]``; an empty right side drops the tag."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                fields.append("")
            if len(fields) != 2 or not fields[0]:
                raise ParseError("expected 'tag<TAB>um_tags'", lineno, path)
            um = tuple(t.strip() for t in fields[1].split(",") if t.strip())
            entries[fields[0].strip()] = um
    rewrites = load_rewrites(rewrites_path) if rewrites_path else ()
    return TagMap(entries, rewrites)


def load_rewrites(path) -> tuple:
    """Read one JSON rule object per line."""
    rules = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                unknown = set(obj) - {"if_present", "if_absent", "add", "remove"}
                if unknown:
                    raise ValueError(f"unknown keys {sorted(unknown)}")
                rules.append(RewriteRule(**{k: frozenset(v) for k, v in obj.items()}))
            except (ValueError, TypeError) as exc:
                raise ParseError(str(exc), lineno, path) from None
    return tuple(rules)


def write_tagmap(path, tagmap: TagMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tag in sorted(tagmap.entries):
            fh.write(f"{tag}\t{','.join(tagmap.entries[tag])}\n")


def write_rewrites(path, rules) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rule in rules:
            fh.write(json.dumps(rule.to_json(), sort_keys=True) + "\n")
