"""Synthetic agglutinative language with known noise labels.

The generator plays every external role at once: it writes the inflection
pairs an unsupervised paradigm-completion system would emit, the analyzer
output for every word, the lexicon, the tag map, the inflecting-POS table, a
held-out lemma→form evaluation set, a dictionary table for resampling, and a
gold-label file giving each pair's noise flags.

Three inflecting parts of speech (verb, noun, adjective) each have two
inflection classes.  The second class uses its own suffixes and mutates the
stem's last vowel in one slot, so the class is visible from any form.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Analysis, AnalysisSet, EvalInstance, ensure_dir, write_analyses, write_unimorph, write_wordlist
from .tagmap import RewriteRule, TagMap, map_analysis, write_rewrites, write_tagmap

__all__ = ["FixtureSpec", "Fixture", "FixtureError", "build_fixture", "gen_fixture", "FLAG_NAMES"]

FLAG_NAMES = ("LEX", "POS", "POS_PAIR", "PDGM", "SLOT")


class FixtureError(ValueError):
    pass


# (analyzer tags, class A suffix, class B suffix, mutate stem in class B)
GRAMMAR = {
    "vblex": [
        (("vblex", "inf"), "ar", "un", False),
        (("vblex", "pri", "p1", "sg"), "o", "um", False),
        (("vblex", "pri", "p3", "sg"), "et", "it", False),
        (("vblex", "pri", "p1", "pl"), "amo", "umi", False),
        (("vblex", "past", "p3", "sg"), "ade", "e", True),
        (("vblex", "imp", "sg"), "a", "u", False),
    ],
    "n": [
        (("n", "sg", "nom"), "o", "is", False),
        (("n", "pl", "nom"), "os", "es", False),
        (("n", "sg", "acc"), "om", "em", False),
        (("n", "pl", "acc"), "ons", "ens", False),
        (("n", "sg", "gen"), "ol", "il", False),
        (("n", "pl", "gen"), "olt", "ilt", True),
    ],
    "adj": [
        (("adj", "sg"), "i", "ik", False),
        (("adj", "pl"), "ir", "iker", False),
        (("adj", "comp"), "ist", "ast", True),
        (("adj", "sup"), "issi", "assi", False),
    ],
}
FUNCTION_POS = ("cnjcoo", "adv", "pr")
TAGMAP = {
    "vblex": ("V",), "n": ("N",), "adj": ("ADJ",),
    "inf": ("NFIN",), "pri": ("IND", "PRS"), "past": ("IND", "PST"), "imp": ("IMP",),
    "p1": ("1",), "p2": ("2",), "p3": ("3",), "sg": ("SG",), "pl": ("PL",),
    "nom": ("NOM",), "acc": ("ACC",), "gen": ("GEN",),
    "comp": ("CMPR",), "sup": ("SPRL",),
    "cnjcoo": ("CONJ",), "adv": ("ADV",), "pr": ("ADP",),
}
# The analyzer leaves person off imperatives; UniMorph marks second person.
REWRITES = (RewriteRule(if_present={"IMP"}, if_absent={"1", "2", "3"}, add={"2"}),)
VALID_POS = ("verb", "noun", "adjective")
MUTATION = {"a": "e", "e": "i", "i": "a", "o": "u", "u": "o"}
CONSONANTS = "ptkmnslrvdgb"
VOWELS = "aeiou"
GARBAGE = "qxzwj"


@dataclass
class FixtureSpec:
    n_pairs: int = 1000
    stems: int = 60  # training stems per POS
    heldout_stems: int = 20  # evaluation stems per POS
    dictionary_stems: int = 120  # extra stems per POS in the dictionary table only
    function_lemmas: int = 24
    irregular_fraction: float = 0.25
    rates: dict = field(default_factory=dict)  # flag -> fraction of all pairs
    n_eval: int = 200
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.rates) - set(FLAG_NAMES)
        if unknown:
            raise FixtureError(f"unknown noise flags {sorted(unknown)}")
        for flag, rate in self.rates.items():
            if not 0.0 <= rate <= 1.0:
                raise FixtureError(f"rate for {flag} outside [0, 1]")
        if sum(self.rates.values()) > 1.0 + 1e-9:
            raise FixtureError("noise rates sum to more than 1")
        if not 0.0 <= self.irregular_fraction <= 1.0:
            raise FixtureError("irregular_fraction outside [0, 1]")
        if self.stems < 2:
            raise FixtureError("need at least two stems per POS")

    @classmethod
    def from_dict(cls, d: dict) -> "FixtureSpec":
        return cls(**d)


@dataclass
class Paradigm:
    pos: str
    lemma: str
    forms: list  # one surface per slot index of the POS


@dataclass
class Fixture:
    spec: FixtureSpec
    pairs: list  # (source, target, slot, flags frozenset of str)
    analyses: dict
    lexicon: set
    tagmap: TagMap
    valid_pos: tuple
    eval_set: list
    dictionary: list
    slot_msd: dict  # slot id -> MSD
    paradigms: list

    @property
    def gold(self) -> list:
        return [(s, t, slot, flags) for s, t, slot, flags in self.pairs]


def _stem(rng, used):
    while True:
        n_syl = 2 + int(rng.random() < 0.3)
        stem = "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))] for _ in range(n_syl))
        if stem not in used:
            used.add(stem)
            return stem


def _mutate(stem: str) -> str:
    for i in range(len(stem) - 1, -1, -1):
        if stem[i] in MUTATION:
            return stem[:i] + MUTATION[stem[i]] + stem[i + 1 :]
    return stem


def _paradigm(pos, stem, irregular):
    forms = []
    for _, suf_a, suf_b, mutate in GRAMMAR[pos]:
        if irregular:
            forms.append((_mutate(stem) if mutate else stem) + suf_b)
        else:
            forms.append(stem + suf_a)
    return forms


def _make_paradigms(rng, pos, count, used_stems, surfaces, irregular_fraction):
    out = []
    while len(out) < count:
        stem = _stem(rng, used_stems)
        forms = _paradigm(pos, stem, rng.random() < irregular_fraction)
        if len(set(forms)) != len(forms) or any(f in surfaces for f in forms):
            continue
        surfaces.update(forms)
        out.append(Paradigm(pos, forms[0], forms))
    return out


def build_fixture(spec: FixtureSpec) -> Fixture:
    rng = np.random.default_rng(spec.seed)
    tagmap = TagMap({k: v for k, v in TAGMAP.items()}, REWRITES)

    # Slot inventory with arbitrary identifiers.
    slot_keys = [(pos, i) for pos in GRAMMAR for i in range(len(GRAMMAR[pos]))]
    ids = rng.permutation(len(slot_keys)) * 3 + 1
    slot_id = {key: int(i) for key, i in zip(slot_keys, ids)}
    slot_msd = {}
    for (pos, i), sid in slot_id.items():
        slot_msd[sid] = map_analysis(Analysis("x", GRAMMAR[pos][i][0]), tagmap)

    used_stems, surfaces = set(), set()
    train_p, held_p, dict_p = {}, {}, {}
    for pos in GRAMMAR:
        train_p[pos] = _make_paradigms(rng, pos, spec.stems, used_stems, surfaces, spec.irregular_fraction)
        held_p[pos] = _make_paradigms(rng, pos, spec.heldout_stems, used_stems, surfaces, spec.irregular_fraction)
        dict_p[pos] = _make_paradigms(rng, pos, spec.dictionary_stems, used_stems, surfaces, spec.irregular_fraction)

    analyses = {}
    for group in (train_p, held_p, dict_p):
        for pos, plist in group.items():
            for p in plist:
                for i, form in enumerate(p.forms):
                    analyses.setdefault(form, set()).add(Analysis(p.lemma, GRAMMAR[pos][i][0]))

    # Function words: a base form plus a clitic variant of the same lemma.
    functions = []
    while len(functions) < spec.function_lemmas:
        word = "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))] for _ in range(1 + int(rng.random() < 0.5)))
        variant = word + "n"
        if word in surfaces or variant in surfaces:
            continue
        surfaces.update((word, variant))
        tag = FUNCTION_POS[len(functions) % len(FUNCTION_POS)]
        functions.append((word, variant))
        for w in (word, variant):
            analyses[w] = {Analysis(word, (tag,))}

    lexicon = set(analyses)

    # ---- pairs ---------------------------------------------------------
    n = spec.n_pairs
    counts = {f: int(round(spec.rates.get(f, 0.0) * n)) for f in FLAG_NAMES}
    if sum(counts.values()) > n:
        raise FixtureError("rounded noise counts exceed the number of pairs")
    counts_correct = n - sum(counts.values())
    all_slots = sorted(slot_msd)
    pos_list = list(GRAMMAR)
    kinds = ["C"] * counts_correct + [f for f in FLAG_NAMES for _ in range(counts[f])]
    kinds = [kinds[i] for i in rng.permutation(len(kinds))]

    def pick_paradigm(pos=None):
        pos = pos or pos_list[rng.integers(len(pos_list))]
        plist = train_p[pos]
        return pos, plist[rng.integers(len(plist))]

    def two_slots(pos):
        k = len(GRAMMAR[pos])
        i = int(rng.integers(k))
        j = int(rng.integers(k - 1))
        return i, j + (j >= i)

    garbage_used = set()
    pairs = []
    for kind in kinds:
        if kind == "C":
            pos, p = pick_paradigm()
            i, j = two_slots(pos)
            pairs.append((p.forms[i], p.forms[j], slot_id[(pos, j)], frozenset()))
        elif kind == "SLOT":
            pos, p = pick_paradigm()
            i, j = two_slots(pos)
            wrong = [x for x in range(len(GRAMMAR[pos])) if x != j]
            w = wrong[int(rng.integers(len(wrong)))]
            pairs.append((p.forms[i], p.forms[j], slot_id[(pos, w)], frozenset({"SLOT"})))
        elif kind == "PDGM":
            pos, a = pick_paradigm()
            while True:
                _, b = pick_paradigm(pos)
                if b is not a:
                    break
            i = int(rng.integers(len(GRAMMAR[pos])))
            j = int(rng.integers(len(GRAMMAR[pos])))
            pairs.append((a.forms[i], b.forms[j], slot_id[(pos, j)], frozenset({"PDGM"})))
        elif kind == "POS_PAIR":
            pos_a = pos_list[rng.integers(len(pos_list))]
            others = [x for x in pos_list if x != pos_a]
            pos_b = others[int(rng.integers(len(others)))]
            _, a = pick_paradigm(pos_a)
            _, b = pick_paradigm(pos_b)
            i = int(rng.integers(len(GRAMMAR[pos_a])))
            j = int(rng.integers(len(GRAMMAR[pos_b])))
            pairs.append((a.forms[i], b.forms[j], slot_id[(pos_b, j)], frozenset({"POS_PAIR"})))
        elif kind == "POS":
            base, variant = functions[int(rng.integers(len(functions)))]
            src, tgt = (base, variant) if rng.random() < 0.5 else (variant, base)
            slot = all_slots[int(rng.integers(len(all_slots)))]
            # A function word never carries an inflectional MSD, so its slot is wrong too.
            pairs.append((src, tgt, slot, frozenset({"POS", "SLOT"})))
        elif kind == "LEX":
            while True:
                g = "".join(GARBAGE[rng.integers(len(GARBAGE))] + VOWELS[rng.integers(len(VOWELS))] for _ in range(2))
                if g not in garbage_used and g not in surfaces:
                    break
            garbage_used.add(g)
            pos = pos_list[rng.integers(len(pos_list))]
            i, j = two_slots(pos)
            suffixes = [row[1] for row in GRAMMAR[pos]]
            src, tgt = g + suffixes[i], g + suffixes[j]
            for w in (src, tgt):
                analyses.setdefault(w, set())
            pairs.append((src, tgt, slot_id[(pos, j)], frozenset({"LEX"})))

    _check_identifiable(pairs, analyses, tagmap, slot_msd)

    # ---- evaluation and dictionary tables ------------------------------
    candidates = []
    for pos in pos_list:
        for p in held_p[pos]:
            for j in range(1, len(GRAMMAR[pos])):
                candidates.append(EvalInstance(p.lemma, p.forms[j], slot_msd[slot_id[(pos, j)]]))
    if spec.n_eval > len(candidates):
        raise FixtureError(f"only {len(candidates)} evaluation instances available")
    chosen = sorted(rng.choice(len(candidates), size=spec.n_eval, replace=False).tolist())
    eval_set = [candidates[i] for i in chosen]

    dictionary = []
    for group in (dict_p, held_p, train_p):
        for pos in pos_list:
            for p in group[pos]:
                for j in range(len(GRAMMAR[pos])):
                    dictionary.append(EvalInstance(p.lemma, p.forms[j], slot_msd[slot_id[(pos, j)]]))

    analyses = {s: AnalysisSet(s, frozenset(a)) for s, a in analyses.items()}
    paradigms = [p for pos in pos_list for p in train_p[pos]]
    return Fixture(spec, pairs, analyses, lexicon, tagmap, VALID_POS, eval_set, dictionary, slot_msd, paradigms)


def _check_identifiable(pairs, analyses, tagmap, slot_msd):
    """Each slot's true MSD must strictly outweigh every other MSD in its row.

    That makes the generating slot → MSD assignment the unique optimum of the
    type-overlap matching, so every injected SLOT label is detectable.
    """
    types = defaultdict(set)
    for _, tgt, slot, _ in pairs:
        for a in analyses.get(tgt, ()):
            types[(slot, map_analysis(a, tagmap))].add(tgt)
    rows = defaultdict(dict)
    for (slot, msd), ws in types.items():
        rows[slot][msd] = len(ws)
    for slot, msd in slot_msd.items():
        row = rows.get(slot, {})
        own = row.get(msd, 0)
        rival = max((w for m, w in row.items() if m != msd), default=0)
        if own <= rival:
            raise FixtureError(
                f"slot {slot} ({msd}) is not identifiable: {own} correct types vs {rival} for a rival MSD; "
                "lower the SLOT/POS rates or raise n_pairs"
            )


def gen_fixture(spec: FixtureSpec, out_dir) -> dict:
    """Write every fixture file into ``out_dir``; returns name → path."""
    fx = build_fixture(spec)
    out = ensure_dir(out_dir)
    paths = {
        "pairs": out / "pairs.tsv",
        "analyses": out / "analyses.tsv",
        "lexicon": out / "lexicon.txt",
        "tagmap": out / "tagmap.tsv",
        "rewrites": out / "rewrites.jsonl",
        "valid_pos": out / "valid_pos.txt",
        "eval": out / "eval.tsv",
        "gold": out / "gold.tsv",
        "unimorph": out / "unimorph.tsv",
        "slots": out / "slots.tsv",
        "spec": out / "fixture.json",
    }
    with open(paths["pairs"], "w", encoding="utf-8") as fh:
        for s, t, slot, _ in fx.pairs:
            fh.write(f"{s}\t{t}\t{slot}\n")
    with open(paths["gold"], "w", encoding="utf-8") as fh:
        for s, t, slot, flags in fx.pairs:
            status = "noisy" if flags else "correct"
            fh.write(f"{s}\t{t}\t{slot}\t{status}\t{','.join(f for f in FLAG_NAMES if f in flags)}\n")
    write_analyses(paths["analyses"], fx.analyses)
    write_wordlist(paths["lexicon"], fx.lexicon)
    write_tagmap(paths["tagmap"], fx.tagmap)
    write_rewrites(paths["rewrites"], fx.tagmap.rewrites)
    write_wordlist(paths["valid_pos"], fx.valid_pos)
    write_unimorph(paths["eval"], fx.eval_set)
    write_unimorph(paths["unimorph"], fx.dictionary)
    with open(paths["slots"], "w", encoding="utf-8") as fh:
        for slot in sorted(fx.slot_msd):
            fh.write(f"{slot}\t{fx.slot_msd[slot]}\n")
    labels = Counter("+".join(f for f in FLAG_NAMES if f in flags) or "C" for *_, flags in fx.pairs)
    report = {
        "spec": asdict(spec),
        "pairs": len(fx.pairs),
        "types": len({s for s, *_ in fx.pairs} | {t for _, t, *_ in fx.pairs}),
        "labels": dict(sorted(labels.items())),
    }
    with open(paths["spec"], "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {k: Path(v) for k, v in paths.items()}


def read_gold(path) -> list:
    """``(source, target, slot, status, frozenset of flag names)`` per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            s, t, slot, status, flags = line.split("\t")
            out.append((s, t, int(slot), status, frozenset(f for f in flags.split(",") if f)))
    return out
