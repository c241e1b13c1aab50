import csv
import json

import pytest

from inflnoise import experiment as exp
from inflnoise.annotator import combo_label
from inflnoise.experiment import ConfigError, ExperimentConfig, build_datasets, load_resources, plan_cells, prepare_corpus
from inflnoise.fixture import gen_fixture
from inflnoise.report import NA, ReportError, report

FIXTURE = dict(n_pairs=240, stems=12, heldout_stems=4, dictionary_stems=30, n_eval=20, seed=2,
               rates={"LEX": 0.05, "POS": 0.1, "PDGM": 0.1, "SLOT": 0.05})
TINY_TRAIN = dict(epochs=1, hidden=8, embedding=8, batch_size=64)


def config(tmp, **kw):
    d = dict(kind="noise-quantity", out=str(tmp / "run"), fixture=FIXTURE, train=TINY_TRAIN, seeds=[1, 2],
             models=["encdec"], partitions=[0, 10])
    d.update(kw)
    return ExperimentConfig.from_dict(d)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    paths = gen_fixture(exp.FixtureSpec.from_dict(FIXTURE), tmp_path_factory.mktemp("fx"))
    data = {k: str(paths[k]) for k in exp.DATA_KEYS}
    pairs, res = load_resources(data)
    prepare_corpus(pairs, res)
    return pairs, data


def csv_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_cmlm_grid_has_220_cells(tmp, corpus):
    pairs, data = corpus
    cfg = config(tmp, kind="cmlm-compare", models=["encdec", "pointer"], seeds=[13, 21, 34, 55, 89], partitions=None)
    cells = plan_cells(cfg, build_datasets(cfg, pairs, data))
    assert len(cells) == 2 * 5 * 11 * 2
    assert len({c.key for c in cells}) == len(cells)


def test_noise_type_datasets(tmp, corpus):
    pairs, data = corpus
    cfg = config(tmp, kind="noise-type", partitions=None)
    built = build_datasets(cfg, pairs, data)
    combos = {combo_label(p.annotation.flags) for p in pairs if p.annotation.status == "noisy"}
    assert [part for _, part, _ in built][0] == "C"
    assert {part for _, part, _ in built[1:]} == combos
    clean = len(built[0][2])
    for _, _part, ds in built[1:]:
        assert len(ds) == clean + ds.metadata["added"]


def test_full_and_resampled_sources(tmp, corpus):
    pairs, data = corpus
    cfg = config(tmp, kind="full", sources=["tumpc", "unimorph", "unimorph-length"], partitions=None)
    built = build_datasets(cfg, pairs, data)
    assert [(s, p) for s, p, _ in built] == [("tumpc", "full"), ("unimorph", "full"), ("unimorph-length", "full")]
    sizes = {len(ds) for *_, ds in built}
    assert len(sizes) == 1


@pytest.mark.parametrize("bad", [
    {"kind": "nope"},
    {"seeds": [1, 1]},
    {"seeds": []},
    {"models": ["transformer"]},
    {"partitions": [11]},
    {"sources": ["web"]},
    {"pretrain_epochs": -1},
    {"train": {"lr": -1}},
    {"bogus": 1},
])
def test_config_validation(tmp, bad):
    with pytest.raises(ConfigError):
        config(tmp, **bad)


def test_config_needs_data(tmp):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "full"})
    with pytest.raises(ConfigError, match="not found"):
        ExperimentConfig.from_dict({"kind": "full", "data": {k: "missing.tsv" for k in
                                                              ("pairs", "analyses", "lexicon", "tagmap", "valid_pos", "eval")}}, tmp)


def test_load_resolves_relative_paths(tmp):
    (tmp / "exp.json").write_text(json.dumps({"kind": "full", "fixture": FIXTURE, "out": "res"}))
    cfg = ExperimentConfig.load(tmp / "exp.json")
    assert cfg.out == tmp / "res"
    assert cfg.pretrained == (False,)


def test_run_resume_and_report(tmp):
    cfg = config(tmp)
    counts = exp.run_experiment(cfg)
    assert counts == {"cells": 4, "ran": 4, "skipped": 0, "failed": 0}
    rows = csv_rows(cfg.out / "results.csv")
    assert len(rows) == 4 and all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows)

    # Drop one finished cell; only that one runs again.
    lines = (cfg.out / "manifest.jsonl").read_text().splitlines()
    (cfg.out / "manifest.jsonl").write_text("\n".join(lines[:-1]) + "\n")
    before = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    counts = exp.run_experiment(cfg)
    assert counts == {"cells": 4, "ran": 1, "skipped": 3, "failed": 0}
    after = [{k: v for k, v in r.items() if k != "seconds"} for r in csv_rows(cfg.out / "results.csv")]
    assert after == before

    written = report(cfg.out)
    curves = csv_rows(written["curves"])
    assert [int(r["partition"]) for r in curves] == [0, 10]
    assert all(r["n"] == "2" for r in curves)


def test_failing_cell_is_recorded(tmp, monkeypatch):
    real = exp._run_cell

    def flaky(cell, *args):
        if cell.seed == 2 and cell.partition == "10":
            raise RuntimeError("boom")
        return real(cell, *args)

    monkeypatch.setattr(exp, "_run_cell", flaky)
    cfg = config(tmp)
    counts = exp.run_experiment(cfg)
    assert counts["failed"] == 1 and counts["ran"] == 4
    failures = csv_rows(cfg.out / "failures.csv")
    assert len(failures) == 1 and "boom" in failures[0]["error"]
    summary = {r["partition"]: r for r in csv_rows(cfg.out / "summary.csv")}
    assert summary["10"]["n"] == "1" and summary["10"]["std"] == NA

    # A rerun retries only the failed cell.
    monkeypatch.setattr(exp, "_run_cell", real)
    counts = exp.run_experiment(cfg)
    assert counts == {"cells": 4, "ran": 1, "skipped": 3, "failed": 0}


def test_report_marks_missing_cells(tmp, monkeypatch):
    monkeypatch.setattr(exp, "_run_cell", lambda cell, *a: (_ for _ in ()).throw(RuntimeError("x"))
                        if cell.partition == "0" else {"accuracy": 0.5, "seconds": 0.0, "predictions": []})
    cfg = config(tmp)
    exp.run_experiment(cfg)
    curves = {r["partition"]: r for r in csv_rows(report(cfg.out)["curves"])}
    assert curves["0"]["mean"] == NA and curves["0"]["n"] == "0"
    assert curves["10"]["mean"] == "0.5"


def test_report_pretraining_change(tmp, monkeypatch):
    monkeypatch.setattr(exp, "_run_cell", lambda cell, *a: {
        "accuracy": 0.6 if cell.pretrained else 0.5, "seconds": 0.0, "predictions": []})
    cfg = config(tmp, kind="cmlm-compare")
    exp.run_experiment(cfg)
    rows = csv_rows(report(cfg.out)["pretraining_change"])
    assert len(rows) == 2
    assert all(float(r["percent_change"]) == pytest.approx(20.0) for r in rows)


def test_report_annotation_change(tmp, monkeypatch):
    monkeypatch.setattr(exp, "_run_cell", lambda cell, *a: {
        "accuracy": 0.8 if cell.partition == "C" else 0.4, "seconds": 0.0, "predictions": []})
    cfg = config(tmp, kind="noise-type", partitions=None, seeds=[1])
    exp.run_experiment(cfg)
    rows = csv_rows(report(cfg.out)["annotation_change"])
    assert rows and all(float(r["percent_change"]) == pytest.approx(-50.0) for r in rows)


def test_report_rejects_empty_directory(tmp):
    with pytest.raises(ReportError):
        report(tmp)
    with pytest.raises(ReportError):
        report(tmp / "absent")


def test_lowercase_folds_surfaces(tmp):
    paths = gen_fixture(exp.FixtureSpec(n_pairs=100, stems=10, heldout_stems=4, dictionary_stems=10, n_eval=10), tmp)
    paths["pairs"].write_text(paths["pairs"].read_text().upper())
    lines = [line.split("\t") for line in paths["pairs"].read_text().splitlines()]
    assert all(src.isupper() for src, *_ in lines)
    data = {k: str(paths[k]) for k in exp.DATA_KEYS}
    for lowercase, expected in ((False, {"filtered"}), (True, {"correct"})):
        pairs, res = load_resources(data, lowercase)
        prepare_corpus(pairs, res)
        assert {p.annotation.status for p in pairs} == expected
