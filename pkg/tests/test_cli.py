import json

import pytest

from inflnoise.cli import main
from inflnoise.corpus import parse_unimorph
from inflnoise.datasets import read_dataset


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["gen-fixture", "--out", str(out / "fx"), "--n-pairs", "200", "--rate", "POS=0.1",
                 "--rate", "SLOT=0.05", "--seed", "4"]) == 0
    return out


def resources(fx):
    d = fx / "fx"
    return ["--pairs", str(d / "pairs.tsv"), "--analyses", str(d / "analyses.tsv"), "--lexicon", str(d / "lexicon.txt"),
            "--tagmap", str(d / "tagmap.tsv"), "--rewrites", str(d / "rewrites.jsonl"), "--valid-pos", str(d / "valid_pos.txt")]


def test_fixture_report(fx):
    report = json.loads((fx / "fx" / "fixture.json").read_text())
    assert report["pairs"] == 200 and report["spec"]["seed"] == 4


def test_pipeline(fx, capsys):
    d = fx / "fx"
    assert main(["map-slots", "--pairs", str(d / "pairs.tsv"), "--analyses", str(d / "analyses.tsv"),
                 "--tagmap", str(d / "tagmap.tsv"), "--rewrites", str(d / "rewrites.jsonl"), "--out", str(fx / "slots.tsv")]) == 0
    assert main(["annotate", *resources(fx), "--mapping", str(fx / "slots.tsv"), "--out", str(fx / "ann.tsv")]) == 0
    stats = json.loads((fx / "ann.tsv.stats.json").read_text())
    assert stats["total"] == 200

    assert main(["build-dataset", "--annotated", str(fx / "ann.tsv"), "--kind", "cumulative", "--k", "2",
                 "--name", "fx", "--out", str(fx / "ds")]) == 0
    names = sorted(p.name for p in (fx / "ds").glob("*.tsv"))
    assert names == ["fx.cum0of2.s0.tsv", "fx.cum1of2.s0.tsv", "fx.cum2of2.s0.tsv"]
    for kind in ("split", "add-one-in"):
        assert main(["build-dataset", "--annotated", str(fx / "ann.tsv"), "--kind", kind, "--out", str(fx / kind)]) == 0
    assert main(["build-dataset", "--annotated", str(fx / "ann.tsv"), "--kind", "unimorph-length", "--unimorph",
                 str(d / "unimorph.tsv"), "--eval", str(d / "eval.tsv"), "--out", str(fx / "um")]) == 0
    assert list((fx / "um").glob("*.tsv"))

    ds = str(fx / "ds" / "fx.cum2of2.s0.tsv")
    small = ["--epochs", "1", "--hidden", "8", "--embedding", "8"]
    assert main(["pretrain", "--dataset", ds, "--model", "pointer", *small, "--out", str(fx / "pt.json")]) == 0
    assert main(["train", "--dataset", ds, "--model", "pointer", *small, "--init", str(fx / "pt.json"),
                 "--out", str(fx / "m.json")]) == 0
    assert (fx / "m.json.loss.csv").read_text().startswith("epoch")
    capsys.readouterr()
    assert main(["evaluate", "--checkpoint", str(fx / "m.json"), "--eval", str(d / "eval.tsv"),
                 "--out", str(fx / "pred.tsv")]) == 0
    assert capsys.readouterr().out.startswith("accuracy ")
    assert len((fx / "pred.tsv").read_text().splitlines()) == len(parse_unimorph(d / "eval.tsv"))
    assert len(read_dataset(ds)) > 0


def test_experiment_and_report(fx, tmp):
    cfg = {"kind": "noise-quantity", "fixture": {"n_pairs": 150, "n_eval": 10, "rates": {"PDGM": 0.2}},
           "models": ["encdec"], "seeds": [1], "partitions": [0], "k": 2,
           "train": {"epochs": 1, "hidden": 8, "embedding": 8}}
    (tmp / "exp.json").write_text(json.dumps(cfg))
    assert main(["experiment", "run", str(tmp / "exp.json"), "--out", str(tmp / "res")]) == 0
    assert main(["report", str(tmp / "res")]) == 0
    assert (tmp / "res" / "report" / "curves.csv").is_file()


def test_errors_exit_nonzero(tmp, capsys):
    assert main(["report", str(tmp)]) == 2
    assert "error:" in capsys.readouterr().err
    (tmp / "bad.json").write_text(json.dumps({"kind": "full"}))
    assert main(["experiment", "run", str(tmp / "bad.json")]) == 2
    assert main(["gen-fixture", "--out", str(tmp / "x"), "--rate", "SLOT=1.5"]) == 2
    with pytest.raises(SystemExit):
        main(["train"])
