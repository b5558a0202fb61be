"""Report serialization (json, csv, markdown) and prediction dumps."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..dataset import EmbeddedDataset
from ..models import DISPLAY_NAMES, KINDS
from .metrics import MissingCellError
from .runner import CellSummary, ExperimentReport, RunResult, rank_models

SCHEMA_VERSION = 1
FORMATS = ("json", "csv", "markdown")
# column order of the published tables
TABLE_ORDER = ("fnn_adam", "fnn_sgd", "lstm", "bd_lstm", "ed_lstm", "rnn", "cnn")


class ReportError(RuntimeError):
    pass


def to_dict(report: ExperimentReport) -> dict:
    try:
        table, means = rank_models(report)
        ranks = {"table": table, "mean": means}
    except MissingCellError:
        ranks = None
    else:
        # a dataset whose cells all failed has no score; leave the table out rather than guess
        if any(c.test_mean is None for c in report.cells):
            ranks = None
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "cells": [c.to_dict() for c in report.cells],
        "ranks": ranks,
        "runs": [r.to_dict() for r in report.runs],
    }


def from_dict(d: dict) -> ExperimentReport:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ReportError(f"unsupported report schema_version {version!r} (expected {SCHEMA_VERSION})")
    return ExperimentReport(d["config"], [CellSummary.from_dict(c) for c in d["cells"]],
                            [RunResult.from_dict(r) for r in d["runs"]])


def to_json(report: ExperimentReport) -> str:
    return json.dumps(to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_report(path) -> ExperimentReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read report {path}: {exc.strerror or exc}") from exc
    try:
        return from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ReportError(f"{path} is not a valid report: {exc}") from exc


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "model", "split", "horizon", "mean", "ci", "n_runs", "n_failed"])
    for c in report.cells:
        for split_name in ("train", "test"):
            mean = getattr(c, f"{split_name}_mean")
            ci = getattr(c, f"{split_name}_ci")
            overall = getattr(c, f"{split_name}_overall")
            rows = []
            if mean is not None:
                for h, m in enumerate(mean, start=1):
                    rows.append((str(h), m, None if ci is None else ci[h - 1]))
                rows.append(("overall", overall[0], overall[1]))
            for h, m, e in rows:
                w.writerow([c.dataset, c.model, split_name, h, repr(m), "" if e is None else repr(e),
                            c.n_runs, c.n_runs - c.n_ok])
    return buf.getvalue()


def _fmt(mean, ci) -> str:
    if mean is None:
        return "failed"
    if ci is None:
        return f"{mean:.4f} (n=1)"
    return f"{mean:.4f} ± {ci:.4f}"


def to_markdown(report: ExperimentReport) -> str:
    models = [m for m in TABLE_ORDER if m in report.models] + \
             [m for m in report.models if m not in TABLE_ORDER]
    out, notes = [], []
    for ds in report.datasets:
        cells = {m: report.cell(ds, m) for m in models}
        header = ["", *(DISPLAY_NAMES.get(m, m) + (" *" if cells[m].failures else "") for m in models)]
        out.append(f"### {ds}\n")
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))

        def row(label, getter):
            out.append("| " + " | ".join([label, *(getter(cells[m]) for m in models)]) + " |")

        row("Train", lambda c: _fmt(*(c.train_overall or (None, None))))
        row("Test", lambda c: _fmt(*(c.test_overall or (None, None))))
        H = next((len(c.test_mean) for c in cells.values() if c.test_mean is not None), 0)
        for h in range(H):
            row(f"Step-{h + 1}", lambda c, h=h: _fmt(c.test_mean[h] if c.test_mean else None,
                                                    c.test_ci[h] if c.test_ci else None))
        out.append("")
        for m in models:
            c = cells[m]
            if c.failures:
                notes.append(f"- {ds} / {DISPLAY_NAMES.get(m, m)}: {len(c.failures)} of {c.n_runs} runs failed "
                             f"(first: run {c.failures[0][0]}, {c.failures[0][1]})")
    if notes:
        out.append("\\* cells with failed runs, excluded from the statistics:\n")
        out.extend(notes)
        out.append("")
    ranks = to_dict(report)["ranks"]
    if ranks is not None:
        out.append("### Ranks\n")
        header = ["Problem", *(DISPLAY_NAMES.get(m, m) for m in models)]
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))
        for ds, row_ranks in ranks["table"].items():
            out.append("| " + " | ".join([ds, *(str(row_ranks[m]) for m in models)]) + " |")
        out.append("| " + " | ".join(["Mean rank", *(f"{ranks['mean'][m]:.2f}" for m in models)]) + " |")
        out.append("")
    return "\n".join(out)


def render(report: ExperimentReport, fmt: str) -> str:
    if not report.cells:
        raise ReportError("report is empty: no (dataset, model) cells")
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(report)
    if fmt == "markdown":
        return to_markdown(report)
    raise ReportError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def emit_report(report: ExperimentReport, fmt: str, out_path=None) -> str:
    """Render ``report`` and write it to ``out_path`` when given; returns the text."""
    text = render(report, fmt)
    if out_path is not None:
        _write(out_path, text)
    return text


def _write(path, text: str):
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_predictions(model, dataset: EmbeddedDataset, horizons, out_path=None, offset: int = 0,
                     transform=None) -> str:
    """Actual vs predicted values over ``dataset``, one section per horizon.

    Rows are ``step,index,actual,predicted`` where ``index`` is the series
    position of the target; ``offset`` is the series position of the first
    sample's window start.  ``transform`` optionally maps values (e.g. back
    to original units) before writing.
    """
    H = dataset.H
    steps = [int(h) for h in horizons]
    if not steps:
        raise ValueError("no horizons requested")
    for h in steps:
        if not 1 <= h <= H:
            raise ValueError(f"horizon {h} outside 1..{H}")
    pred = model.predict(dataset.inputs)
    actual = dataset.targets
    if transform is not None:
        pred, actual = transform(pred), transform(actual)
    first_target = offset + (dataset.D - 1) * dataset.T + 1
    idx = np.arange(len(dataset))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "index", "actual", "predicted"])
    for h in steps:
        for i in idx:
            w.writerow([h, int(first_target + i + h - 1), repr(float(actual[i, h - 1])), repr(float(pred[i, h - 1]))])
    text = buf.getvalue()
    if out_path is not None:
        _write(out_path, text)
    return text


__all__ = ["SCHEMA_VERSION", "FORMATS", "TABLE_ORDER", "ReportError", "to_dict", "from_dict", "to_json",
           "load_report", "to_csv", "to_markdown", "render", "emit_report", "emit_predictions", "KINDS"]
