from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from inflnoise.annotator import AnnotationResult, NoiseFlag
from inflnoise.corpus import MSD, EvalInstance, InflectionPair
from inflnoise.datasets import (
    Dataset,
    PartitionPlan,
    ResampleError,
    Sample,
    add_one_in,
    cumulative_datasets,
    length_matched_resample,
    partition_noise,
    read_dataset,
    resample_unimorph,
    split_correct_noisy,
    write_dataset,
)

PST, PL = MSD.parse("V;PST"), MSD.parse("N;PL")


def noisy_samples(n, label="SLOT"):
    return [Sample(f"s{i}", f"t{i}", PST, label) for i in range(n)]


def correct_samples(n):
    return [Sample(f"c{i}", f"d{i}", PST) for i in range(n)]


def test_split_sizes():
    pairs = []
    for i in range(100):
        p = InflectionPair(f"a{i}", f"b{i}", 1, PST)
        p.annotation = AnnotationResult.correct() if i < 60 else AnnotationResult.noisy({NoiseFlag.SLOT})
        pairs.append(p)
    f = InflectionPair("x", "y", 1, PST)
    f.annotation = AnnotationResult.filtered("UNANNOTATABLE")
    correct, noisy = split_correct_noisy(pairs + [f])
    assert (len(correct), len(noisy)) == (60, 40)
    assert [s.source for s in correct] == [f"a{i}" for i in range(60)]


def test_all_correct_gives_empty_noise():
    p = InflectionPair("a", "b", 1, PST)
    p.annotation = AnnotationResult.correct()
    assert len(split_correct_noisy([p])[1]) == 0


def test_partition_103_into_10():
    plan = partition_noise(noisy_samples(103), 10, seed=4)
    assert sorted(plan.sizes()) == [10] * 7 + [11] * 3


def test_partition_singletons_and_determinism():
    plan = partition_noise(noisy_samples(10), 10, seed=1)
    assert plan.sizes() == [1] * 10
    assert partition_noise(noisy_samples(10), 10, seed=1) == plan


def test_cumulative_sizes():
    noisy = Dataset("n", noisy_samples(40))
    out = cumulative_datasets(Dataset("x.correct", correct_samples(60)), noisy, partition_noise(noisy, 10, 0))
    assert [len(d) for d in out] == list(range(60, 101, 4))
    assert Counter(out[-1].samples) == Counter(correct_samples(60) + noisy_samples(40))


def test_cumulative_k0():
    out = cumulative_datasets(Dataset("x.correct", correct_samples(3)), Dataset("n", []), PartitionPlan(0, 0, ()))
    assert len(out) == 1 and out[0].samples == correct_samples(3)


def test_add_one_in_sizes():
    noisy = Dataset("n", noisy_samples(30, "SLOT") + noisy_samples(10, "POS+SLOT"))
    out = add_one_in(Dataset("x.correct", correct_samples(60)), noisy)
    assert {frozenset(k): len(v) for k, v in out.items()} == {
        frozenset({NoiseFlag.SLOT}): 90,
        frozenset({NoiseFlag.POS, NoiseFlag.SLOT}): 70,
    }
    assert all(s.provenance != "SLOT" for s in out[frozenset({NoiseFlag.POS, NoiseFlag.SLOT})])
    assert add_one_in(Dataset("x.correct", correct_samples(3)), Dataset("n", [])) == {}


TABLE = [
    EvalInstance("walk", "walked", PST), EvalInstance("talk", "talked", PST), EvalInstance("jump", "jumped", PST),
    EvalInstance("run", "ran", PST), EvalInstance("cat", "cats", PL), EvalInstance("ox", "oxen", PL),
    EvalInstance("sing", "sang", PST),
]


def test_resample_keeps_msds():
    correct = Dataset("x.correct", [Sample("a", "b", PST), Sample("c", "d", PST), Sample("e", "f", PL)])
    out = resample_unimorph(correct, TABLE, [], seed=0)
    assert sorted(str(s.msd) for s in out) == sorted(str(s.msd) for s in correct)
    assert all(s.provenance == "resampled" and s.source == s.lemma for s in out)


def test_resample_keeps_lemma_overlap():
    eval_set = [EvalInstance(l, "x", PST) for l in ("walk", "talk", "jump", "a", "c", "e")]
    correct = Dataset("x.correct", [Sample(l, l + "ed", PST, lemma=l) for l in ("a", "c", "e", "q", "r")])
    out = resample_unimorph(correct, TABLE, eval_set, seed=3)
    eval_lemmas = {e.lemma for e in eval_set}
    assert sum(s.lemma in eval_lemmas for s in out) == 3
    assert out.metadata["achieved_overlap"] == out.metadata["required_overlap"] == 3


def test_resample_missing_msd():
    correct = Dataset("x.correct", [Sample("a", "b", MSD.parse("N;PL;GEN"))])
    with pytest.raises(ResampleError, match="N;PL;GEN"):
        resample_unimorph(correct, TABLE, [], seed=0)


def test_resample_with_replacement_is_reported():
    correct = Dataset("x.correct", [Sample(f"a{i}", "b", PL) for i in range(5)])
    out = resample_unimorph(correct, TABLE, [], seed=0)
    assert len(out) == 5 and out.metadata["with_replacement"] == 3


def test_length_matched():
    table = [EvalInstance(f"l{i}", "x" * n, PST) for i, n in enumerate([4, 4, 4, 6, 6, 8, 8, 8])]
    correct = Dataset("x.correct", [Sample("a", "bbbb", PST), Sample("c", "dddd", PST), Sample("e", "ffffff", PST)])
    out = length_matched_resample(correct, table, [], seed=1)
    assert Counter(len(s.target) for s in out) == Counter({4: 2, 6: 1})
    assert len(length_matched_resample(Dataset("x.correct", []), table, [], seed=1)) == 0


def test_length_fallback_logged():
    table = [EvalInstance("l", "xxxxx", PST)]
    out = length_matched_resample(Dataset("x.correct", [Sample("a", "bbbb", PST)]), table, [], seed=1)
    assert out.metadata["length_deviations"] == 1


def test_dataset_file_round_trip(tmp):
    ds = Dataset("x.cum1of10.s0", [Sample("a", "b", PST), Sample("c", "d", PL, "POS+SLOT", lemma="cc")], 0, {"partition": 1})
    write_dataset(tmp / "d.tsv", ds)
    back = read_dataset(tmp / "d.tsv")
    assert back.samples == ds.samples and back.name == ds.name and back.metadata["partition"] == 1


@given(st.integers(0, 250), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_partition_size_property(n, k, seed):
    plan = partition_noise(noisy_samples(n), k, seed)
    sizes = plan.sizes()
    assert len(sizes) == k and sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1
