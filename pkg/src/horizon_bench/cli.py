"""``horizon-bench`` command line: run, report, predict, gen."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import (DATASETS, EmbedConfig, ReportError, emit_predictions, emit_report, load_report,
                    load_series, prepare, run_experiment)
from .dataset import inverse_scale
from .learn import TrainConfig
from .models import KINDS, load_checkpoint
from .seriesgen import SYSTEMS, default_params, generate, write_csv

log = logging.getLogger("horizon_bench")


def _csv_list(text: str, allowed, what: str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError(f"empty {what} list")
    bad = [t for t in items if t not in allowed]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown {what}: {', '.join(bad)} (choose from {', '.join(allowed)})")
    return items


def _steps(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="horizon-bench", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train all (dataset, model, run) combinations and write a JSON report")
    r.add_argument("--datasets", required=True, type=lambda s: _csv_list(s, DATASETS, "dataset"))
    r.add_argument("--models", required=True, type=lambda s: _csv_list(s, KINDS, "model"))
    r.add_argument("--runs", type=int, default=30)
    r.add_argument("--epochs", type=int, default=1000)
    r.add_argument("--batch-size", type=int, default=32)
    r.add_argument("--learning-rate", type=float, default=None,
                   help="default 0.001 for Adam models, 0.01 for FNN-SGD")
    r.add_argument("--gradient-clip", type=float, default=None)
    r.add_argument("--embed-dim", type=int, default=5)
    r.add_argument("--lag", type=int, default=1)
    r.add_argument("--horizon", type=int, default=10)
    r.add_argument("--train-frac", type=float, default=0.6)
    r.add_argument("--truncate", type=int, default=1000)
    r.add_argument("--scale", choices=("full", "train"), default="full")
    r.add_argument("--ci", choices=("t", "normal"), default="t")
    r.add_argument("--master-seed", type=int, default=42)
    r.add_argument("--data-dir", default=None, help="directory holding sunspot.csv, lazer.csv, aci_finance.csv")
    r.add_argument("--checkpoint-dir", default=None, help="save every trained model here")
    r.add_argument("--out", required=True)

    rep = sub.add_parser("report", help="render a JSON report as json, csv or markdown")
    rep.add_argument("--in", dest="inp", required=True)
    rep.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    rep.add_argument("--out", default=None, help="default: stdout")

    pr = sub.add_parser("predict", help="dump actual vs predicted values from a checkpoint")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--dataset", default=None, help="default: the dataset the checkpoint was trained on")
    pr.add_argument("--steps", type=_steps, default=[1, 3, 5, 10])
    pr.add_argument("--split", choices=("train", "test"), default="test")
    pr.add_argument("--original-units", action="store_true", help="undo the min-max scaling")
    pr.add_argument("--data-dir", default=None)
    pr.add_argument("--out", default=None, help="default: stdout")

    g = sub.add_parser("gen", help="write a simulated chaotic series as CSV")
    g.add_argument("--system", required=True, choices=SYSTEMS)
    g.add_argument("--n", type=int, default=2000)
    g.add_argument("--stride", type=int, default=None, help="override the sampling stride")
    g.add_argument("--discard", type=int, default=None, help="override the transient discard")
    g.add_argument("--out", default=None, help="default: stdout")
    return p


def _cmd_run(a) -> int:
    embed_cfg = EmbedConfig(a.embed_dim, a.lag, a.horizon, a.train_frac, a.truncate, a.scale)
    train_cfg = TrainConfig(max_epochs=a.epochs, batch_size=a.batch_size, learning_rate=a.learning_rate,
                            gradient_clip=a.gradient_clip)
    report = run_experiment(a.datasets, a.models, a.runs, train_cfg, embed_cfg, a.master_seed,
                            ci_method=a.ci, data_directory=a.data_dir, checkpoint_dir=a.checkpoint_dir)
    emit_report(report, "json", a.out)
    failed = sum(not r.ok for r in report.runs)
    if failed:
        print(f"horizon-bench: {failed} of {len(report.runs)} runs failed; see {a.out}", file=sys.stderr)
        return 1
    return 0


def _cmd_report(a) -> int:
    text = emit_report(load_report(a.inp), a.format, a.out)
    if a.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_predict(a) -> int:
    model, meta = load_checkpoint(a.checkpoint)
    name = a.dataset or meta.get("dataset")
    if not name:
        raise ValueError("checkpoint does not record its dataset; pass --dataset")
    e = meta.get("embed", {})
    cfg = EmbedConfig(e.get("D", model.spec.input_dim), e.get("T", 1), e.get("H", model.spec.output_dim),
                      e.get("train_frac", 0.6), e.get("truncate", 1000), e.get("scale", "full"))
    prep = prepare(load_series(name, cfg.truncate, a.data_dir), cfg)
    data = prep.test if a.split == "test" else prep.train
    offset = prep.cut if a.split == "test" else 0
    transform = (lambda v: inverse_scale(v, prep.scale)) if a.original_units else None
    text = emit_predictions(model, data, a.steps, a.out, offset=offset, transform=transform)
    if a.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_gen(a) -> int:
    params = default_params(a.system)
    changes = {}
    if a.stride is not None:
        changes["sample_stride"] = a.stride
    if a.discard is not None:
        changes["transient_discard"] = a.discard
    series = generate(a.system, a.n, params.replace(**changes) if changes else params)
    if a.out is None:
        for v in series.values:
            sys.stdout.write(f"{float(v)!r}\n")
    else:
        write_csv(series, Path(a.out))
    return 0


COMMANDS = {"run": _cmd_run, "report": _cmd_report, "predict": _cmd_predict, "gen": _cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ReportError, ValueError, OSError, RuntimeError) as exc:
        print(f"horizon-bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
