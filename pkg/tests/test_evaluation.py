import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from inflnoise.evaluation import RunResult, aggregate, exact_match, percent_change


def test_exact_match():
    assert exact_match(["a", "b"], ["a", "b"]) == 1.0
    assert exact_match(["a", "c"], ["a", "b"]) == 0.5
    assert exact_match(["trägt"], ["trägt"]) == 1.0
    with pytest.raises(ValueError):
        exact_match([], [])
    with pytest.raises(ValueError):
        exact_match(["a"], ["a", "b"])


def test_aggregate():
    mean, std = aggregate([0.2, 0.4])
    assert math.isclose(mean, 0.3)
    assert aggregate([0.7]) == (0.7, None)
    assert aggregate([0.5] * 5) == (0.5, 0.0)
    assert aggregate([RunResult("encdec", "d", 1, 0.25)])[0] == 0.25


def test_percent_change():
    assert math.isclose(percent_change(40.0, 42.0), 5.0)
    assert percent_change(3.0, 3.0) == 0.0
    assert math.isclose(percent_change(50.0, 40.0), -20.0)
    with pytest.raises(ValueError):
        percent_change(0.0, 1.0)


def test_run_result_range():
    with pytest.raises(ValueError):
        RunResult("encdec", "d", 1, 1.5)


pairs = st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")), min_size=1, max_size=30)


@given(pairs, st.randoms())
def test_exact_match_permutation(items, rnd):
    shuffled = list(items)
    rnd.shuffle(shuffled)
    assert exact_match(*zip(*items)) == exact_match(*zip(*shuffled))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.randoms())
def test_aggregate_order_free(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert aggregate(values)[0] == aggregate(shuffled)[0]
