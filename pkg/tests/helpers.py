"""Shared test utilities."""

from inflnoise.experiment import load_resources, prepare_corpus
from inflnoise.fixture import gen_fixture, read_gold


def annotate_fixture(spec, out_dir):
    """Generate a fixture, run the full annotation pipeline on its files and
    return ``(pairs, gold)`` aligned line by line."""
    paths = gen_fixture(spec, out_dir)
    data = {k: str(paths[k]) for k in ("pairs", "analyses", "lexicon", "tagmap", "rewrites", "valid_pos")}
    pairs, res = load_resources(data)
    prepare_corpus(pairs, res)
    return pairs, read_gold(paths["gold"])


def disagreements(pairs, gold):
    bad = []
    for p, (s, t, slot, status, flags) in zip(pairs, gold, strict=True):
        assert (p.source, p.target, p.slot) == (s, t, slot)
        got = frozenset(f.value for f in p.annotation.flags)
        if p.annotation.status != status or got != flags:
            bad.append((s, t, slot, status, sorted(flags), p.annotation.status, sorted(got)))
    return bad
