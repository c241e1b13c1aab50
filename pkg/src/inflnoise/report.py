"""Tidy plot-data tables from an experiment directory.

Reads ``plan.json``, ``summary.csv`` and ``datasets.csv``; every cell in the
plan yields a row, with ``NA`` where no successful run exists.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from .corpus import ensure_dir
from .evaluation import percent_change

__all__ = ["ReportError", "report", "NA"]

NA = "NA"


class ReportError(RuntimeError):
    pass


def _read_csv(path: Path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return NA if x is None else repr(x)


def _change(baseline: Optional[float], treatment: Optional[float]):
    if baseline is None or treatment is None or baseline <= 0:
        return None
    return percent_change(baseline, treatment)


def report(results_dir, out_dir=None) -> dict:
    """Write the report tables; returns table name → path."""
    results_dir = Path(results_dir)
    if not results_dir.is_dir():
        raise ReportError(f"{results_dir} is not a directory")
    needed = [results_dir / n for n in ("plan.json", "summary.csv", "datasets.csv")]
    missing = [p.name for p in needed if not p.is_file()]
    if missing:
        raise ReportError(f"{results_dir} has no experiment results (missing {', '.join(missing)})")
    with open(results_dir / "plan.json", encoding="utf-8") as fh:
        plan = json.load(fh)
    cfg = plan["config"]
    language = cfg["language"]
    cells = plan["cells"]
    if not cells:
        raise ReportError("the experiment plan has no cells")

    summary = {}
    for row in _read_csv(results_dir / "summary.csv"):
        key = (row["model"], row["dataset"], row["pretrained"] == "1")
        summary[key] = (float(row["mean"]), None if row["std"] == NA else float(row["std"]), int(row["n"]))
    sizes = {row["dataset"]: row for row in _read_csv(results_dir / "datasets.csv")}

    # Distinct (model, dataset, source, partition, pretrained) in plan order.
    series = []
    seen = set()
    for c in cells:
        key = (c["model"], c["dataset"], c["source"], c["partition"], bool(c["pretrained"]))
        if key not in seen:
            seen.add(key)
            series.append(key)

    def stat(model, dataset, pretrained):
        return summary.get((model, dataset, pretrained), (None, None, 0))

    out = ensure_dir(out_dir or results_dir / "report")
    written = {}

    numeric = [s for s in series if s[3].isdigit()]
    if numeric:
        rows = []
        order = sorted(numeric, key=lambda s: (s[0], s[2], s[4], int(s[3])))
        for model, dataset, source, part, pre in order:
            mean, std, n = stat(model, dataset, pre)
            rows.append([language, model, source, int(pre), int(part), dataset, sizes[dataset]["size"], n, _fmt(mean), _fmt(std)])
        path = out / "curves.csv"
        _write_csv(path, ["language", "model", "source", "pretrained", "partition", "dataset", "size", "n", "mean", "std"], rows)
        written["curves"] = path

    combos = [s for s in series if not s[3].isdigit() and s[3] != "full"]
    if combos:
        baseline = {(m, src, pre): d for m, d, src, part, pre in combos if part == "C"}
        rows = []
        for model, dataset, source, part, pre in combos:
            if part == "C":
                continue
            base_ds = baseline.get((model, source, pre))
            base_mean = stat(model, base_ds, pre)[0] if base_ds else None
            mean, _, n = stat(model, dataset, pre)
            rows.append([language, model, source, int(pre), part, dataset, sizes[dataset]["size"], sizes[dataset]["added"],
                         n, _fmt(base_mean), _fmt(mean), _fmt(_change(base_mean, mean))])
        path = out / "annotation_change.csv"
        _write_csv(path, ["language", "model", "source", "pretrained", "annotation", "dataset", "size", "added",
                          "n", "baseline_mean", "mean", "percent_change"], rows)
        written["annotation_change"] = path

    full = [s for s in series if s[3] == "full"]
    if full:
        rows = []
        for model, dataset, source, _part, pre in full:
            mean, std, n = stat(model, dataset, pre)
            rows.append([language, model, source, int(pre), dataset, sizes[dataset]["size"], n, _fmt(mean), _fmt(std)])
        path = out / "accuracy.csv"
        _write_csv(path, ["language", "model", "source", "pretrained", "dataset", "size", "n", "mean", "std"], rows)
        written["accuracy"] = path

    pretrain_flags = {s[4] for s in series}
    if pretrain_flags == {False, True}:
        rows = []
        for model, dataset, source, part, pre in series:
            if pre:
                continue
            base = stat(model, dataset, False)[0]
            treated = stat(model, dataset, True)[0]
            rows.append([language, model, source, part, dataset, _fmt(base), _fmt(treated), _fmt(_change(base, treated))])
        path = out / "pretraining_change.csv"
        _write_csv(path, ["language", "model", "source", "partition", "dataset", "baseline_mean", "pretrained_mean", "percent_change"], rows)
        written["pretraining_change"] = path
    return written
