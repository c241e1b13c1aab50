import itertools

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from inflnoise.corpus import MSD, InflectionPair
from inflnoise.slotmap import (
    SlotMapping,
    SlotMsdGraph,
    apply_mapping,
    build_graph,
    hungarian_max,
    max_matching,
    read_mapping,
    write_mapping,
)

A, B, C = MSD.parse("N;SG"), MSD.parse("N;PL"), MSD.parse("V;PST")
IMP = MSD.parse("V;IMP;2;PL")
IND = MSD.parse("V;IND;PRS;2;PL")


def brute_force(matrix):
    """Best total over all partial one-to-one assignments (zero edges count nothing)."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    n = max(rows, cols)
    padded = np.zeros((n, n), dtype=np.int64)
    padded[:rows, :cols] = matrix
    best = 0
    for perm in itertools.permutations(range(n)):
        best = max(best, int(padded[range(n), perm].sum()))
    return best


def test_tragt_edges():
    pairs = [InflectionPair("tragen", "tragt", 2)]
    g = build_graph(pairs, {"tragt": {IMP, IND}})
    assert g.weight == {(2, IMP): 1, (2, IND): 1}


def test_erroneous_type_adds_edge():
    acc = MSD.parse("N;ACC;PL")
    pairs = [InflectionPair("tragen", "tragt", 2), InflectionPair("x", "trage", 2)]
    g = build_graph(pairs, {"tragt": {IMP, IND}, "trage": {acc}})
    assert g.get(2, acc) == 1


def test_types_not_tokens():
    pairs = [InflectionPair("a", "tragt", 2), InflectionPair("b", "tragt", 2)]
    assert build_graph(pairs, {"tragt": {IMP}}).get(2, IMP) == 1


def test_empty_graph():
    assert build_graph([], {}).weight == {}
    assert max_matching(SlotMsdGraph()).assignment == {}


def test_worked_example():
    g = SlotMsdGraph({(2, A): 3, (2, B): 5, (7, B): 2, (7, C): 4})
    m = max_matching(g)
    assert m.assignment == {2: B, 7: C}
    assert m.total_weight == 9


def test_diagonal():
    msds = [MSD.parse(f"N;{t}") for t in ("NOM", "ACC", "GEN", "DAT")]
    g = SlotMsdGraph({(i, m): 1 for i, m in enumerate(msds)})
    m = max_matching(g)
    assert m.assignment == dict(enumerate(msds)) and m.total_weight == 4


def test_competition_for_one_msd():
    m = max_matching(SlotMsdGraph({(1, A): 5, (2, A): 2}))
    assert m.assignment == {1: A} and m.total_weight == 5


def test_ties_go_to_smallest():
    # Both assignments weigh 2; slot 1 takes the MSD whose text sorts first.
    g = SlotMsdGraph({(1, A): 1, (1, B): 1, (2, A): 1, (2, B): 1})
    assert max_matching(g).assignment == {1: B, 2: A}  # "N;PL" < "N;SG"


def test_apply_mapping():
    pairs = [InflectionPair("x", "tragt", 2), InflectionPair("y", "z", 9)]
    unmatched = apply_mapping(pairs, SlotMapping({2: IND}, 1))
    assert pairs[0].predicted_msd == IND
    assert unmatched == [pairs[1]] and pairs[1].predicted_msd is None
    assert len(apply_mapping(pairs, SlotMapping())) == 2


def test_mapping_file_round_trip(tmp):
    m = max_matching(SlotMsdGraph({(2, A): 3, (2, B): 5, (7, B): 2, (7, C): 4}))
    write_mapping(tmp / "m.tsv", m)
    back = read_mapping(tmp / "m.tsv")
    assert back.assignment == m.assignment and back.total_weight == 9


@st.composite
def graphs(draw, max_side=7):
    rows = draw(st.integers(1, max_side))
    cols = draw(st.integers(1, max_side))
    return draw(st.lists(st.lists(st.integers(0, 9), min_size=cols, max_size=cols), min_size=rows, max_size=rows))


@given(graphs())
def test_solver_matches_brute_force(matrix):
    best, assignment = hungarian_max(matrix)
    assert best == brute_force(matrix)
    used = [(r, c) for r, c in enumerate(assignment) if c is not None]
    assert sum(matrix[r][c] for r, c in used) == best
    assert len({c for _, c in used}) == len(used)


@given(graphs(max_side=7))
def test_tie_broken_mapping_is_optimal_and_injective(matrix):
    msds = [MSD.parse(f"N;{t}") for t in ("NOM", "ACC", "GEN", "DAT", "INS", "LOC", "VOC")]
    g = SlotMsdGraph({(r, msds[c]): w for r, row in enumerate(matrix) for c, w in enumerate(row) if w > 0})
    m = max_matching(g)
    assert m.total_weight == brute_force(matrix)
    assert len(set(m.assignment.values())) == len(m.assignment)
    assert max_matching(g).assignment == m.assignment


@given(st.integers(8, 25).flatmap(lambda n: st.lists(st.lists(st.integers(0, 50), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_solver_matches_scipy_on_larger_graphs(matrix):
    rows, cols = linear_sum_assignment(np.array(matrix), maximize=True)
    assert hungarian_max(matrix)[0] == int(np.array(matrix)[rows, cols].sum())
