"""Seeded multi-run experiments: data pipeline, worker pool, aggregation."""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import kernels
from ..dataset import EmbeddedDataset, ScaleParams, embed, fit_scale, min_length, split
from ..learn import TrainConfig, train
from ..models import KINDS, build, save_checkpoint
from ..numkit import Rng
from ..seriesgen import SYSTEMS, CsvFormatError, TimeSeries, generate, load_csv
from .metrics import MissingCellError, aggregate, mean_ranks, pooled_rmse, rank_table, rmse_per_horizon

log = logging.getLogger(__name__)

REAL_DATASETS = ("sunspot", "lazer", "aci_finance")
DATASETS = SYSTEMS + REAL_DATASETS
DEFAULT_TRUNCATE = 1000
DATA_ENV = "HORIZON_BENCH_DATA"
WORKERS_ENV = "HORIZON_BENCH_WORKERS"


class UnknownDatasetError(ValueError):
    pass


@dataclass(frozen=True)
class EmbedConfig:
    D: int = 5
    T: int = 1
    H: int = 10
    train_frac: float = 0.6
    truncate: int = DEFAULT_TRUNCATE
    scale: str = "full"  # or "train": bounds fitted on the values the training split sees

    def __post_init__(self):
        if self.scale not in ("full", "train"):
            raise ValueError(f"scale must be 'full' or 'train', got {self.scale!r}")
        if not 0 < self.train_frac < 1:
            raise ValueError(f"train_frac must lie strictly between 0 and 1, got {self.train_frac}")
        if self.truncate < min_length(self.D, self.T, self.H) + 1:
            raise ValueError(f"truncate={self.truncate} leaves too few points to embed and split")

    def to_dict(self) -> dict:
        return {"D": self.D, "T": self.T, "H": self.H, "train_frac": self.train_frac,
                "truncate": self.truncate, "scale": self.scale}


@dataclass(frozen=True)
class HorizonMetrics:
    split: str
    rmse: tuple

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")
        object.__setattr__(self, "rmse", tuple(float(v) for v in self.rmse))
        if not all(v >= 0 for v in self.rmse):
            raise ValueError("RMSE entries must be non-negative")

    @property
    def H(self) -> int:
        return len(self.rmse)


@dataclass(frozen=True)
class RunResult:
    dataset: str
    model: str
    run: int
    seed: int
    train: HorizonMetrics | None = None
    test: HorizonMetrics | None = None
    train_overall: float | None = None
    test_overall: float | None = None
    wall_time: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        # wall time is deliberately left out so that reports are reproducible byte for byte
        return {
            "dataset": self.dataset, "model": self.model, "run": self.run, "seed": self.seed,
            "train": list(self.train.rmse) if self.train else None,
            "test": list(self.test.rmse) if self.test else None,
            "train_overall": self.train_overall, "test_overall": self.test_overall,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(d["dataset"], d["model"], d["run"], d["seed"],
                   HorizonMetrics("train", d["train"]) if d["train"] is not None else None,
                   HorizonMetrics("test", d["test"]) if d["test"] is not None else None,
                   d["train_overall"], d["test_overall"], 0.0, d["error"])


@dataclass(frozen=True)
class CellSummary:
    """Aggregate of the successful runs of one (dataset, model) pair."""

    dataset: str
    model: str
    n_runs: int
    n_ok: int
    failures: tuple = ()  # (run index, message)
    train_mean: tuple | None = None
    train_ci: tuple | None = None
    test_mean: tuple | None = None
    test_ci: tuple | None = None
    train_overall: tuple | None = None  # (mean, ci)
    test_overall: tuple | None = None

    @property
    def single_run(self) -> bool:
        return self.n_ok == 1

    @property
    def score(self) -> float:
        """Ranking statistic: mean over horizons of the per-horizon test means."""
        if self.test_mean is None:
            return math.nan
        return float(np.mean(self.test_mean))

    def to_dict(self) -> dict:
        d = {"dataset": self.dataset, "model": self.model, "n_runs": self.n_runs, "n_ok": self.n_ok,
             "n_failed": self.n_runs - self.n_ok, "single_run": self.single_run,
             "failures": [{"run": r, "error": e} for r, e in self.failures]}
        for key in ("train_mean", "train_ci", "test_mean", "test_ci", "train_overall", "test_overall"):
            v = getattr(self, key)
            d[key] = None if v is None else [None if x is None else float(x) for x in v]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CellSummary":
        def tup(v):
            return None if v is None else tuple(v)

        return cls(d["dataset"], d["model"], d["n_runs"], d["n_ok"],
                   tuple((f["run"], f["error"]) for f in d["failures"]),
                   tup(d["train_mean"]), tup(d["train_ci"]), tup(d["test_mean"]), tup(d["test_ci"]),
                   tup(d["train_overall"]), tup(d["test_overall"]))


@dataclass
class ExperimentReport:
    config: dict
    cells: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    def cell(self, dataset: str, model: str) -> CellSummary:
        for c in self.cells:
            if c.dataset == dataset and c.model == model:
                return c
        raise KeyError(f"no cell for dataset {dataset!r}, model {model!r}")

    @property
    def datasets(self) -> list:
        return list(dict.fromkeys(c.dataset for c in self.cells))

    @property
    def models(self) -> list:
        return list(dict.fromkeys(c.model for c in self.cells))


def derive_seed(master_seed: int, dataset: str, model: str, run: int) -> int:
    """64-bit seed from a hash of the run's identity."""
    key = f"{master_seed}|{dataset}|{model}|{run}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def data_dir(path=None) -> Path:
    return Path(path or os.environ.get(DATA_ENV) or "data")


def load_series(name: str, n: int = DEFAULT_TRUNCATE, directory=None) -> TimeSeries:
    """Generated series for the chaotic systems, CSV ingestion for the rest.

    Real-world series are read from ``<directory>/<name>.csv`` (or ``.txt``),
    first column, with an optional header line.
    """
    if name in SYSTEMS:
        return generate(name, n)
    if name not in REAL_DATASETS:
        raise UnknownDatasetError(f"unknown dataset {name!r}; choose from {', '.join(DATASETS)}")
    base = data_dir(directory)
    for ext in (".csv", ".txt"):
        path = base / f"{name}{ext}"
        if path.is_file():
            break
    else:
        raise FileNotFoundError(f"data file for {name!r} not found: expected {base / (name + '.csv')} "
                                f"(set {DATA_ENV} or --data-dir)")
    try:
        return load_csv(path, name=name)
    except CsvFormatError as exc:
        if "at row 1" not in str(exc):
            raise
        return load_csv(path, skip_header=True, name=name)


@dataclass(frozen=True)
class Prepared:
    series: TimeSeries  # scaled and truncated
    scale: ScaleParams
    train: EmbeddedDataset
    test: EmbeddedDataset
    cut: int  # index of the first test sample


def prepare(series: TimeSeries, cfg: EmbedConfig) -> Prepared:
    """Truncate, scale, embed and split."""
    raw = series.head(min(len(series), cfg.truncate))
    if cfg.scale == "full":
        scaled, params = fit_scale(raw)
    else:
        n_samples = len(raw) - (cfg.D - 1) * cfg.T - cfg.H
        cut = math.floor(cfg.train_frac * n_samples)
        last = cut - 1 + (cfg.D - 1) * cfg.T + cfg.H
        scaled, params = fit_scale(raw, raw.values[: last + 1])
    full = embed(scaled, cfg.D, cfg.T, cfg.H)
    tr, te = split(full, cfg.train_frac)
    return Prepared(scaled, params, tr, te, len(tr))


def _checkpoint_name(dataset: str, model: str, run: int) -> str:
    return f"{dataset}__{model}__run{run:03d}.ckpt"


def _execute(task: dict) -> RunResult:
    ds, kind, run, seed = task["dataset"], task["model"], task["run"], task["seed"]
    prep: Prepared = task["prepared"]
    start = time.perf_counter()
    try:
        model = build(kind, Rng(seed), input_dim=prep.train.D, output_dim=prep.train.H)
        cfg = replace(task["train_config"], optimizer=model.spec.optimizer, shuffle_seed=seed)
        train(model, prep.train, cfg)
        p_tr = model.predict(prep.train.inputs)
        p_te = model.predict(prep.test.inputs)
        result = RunResult(
            ds, kind, run, seed,
            HorizonMetrics("train", rmse_per_horizon(p_tr, prep.train.targets)),
            HorizonMetrics("test", rmse_per_horizon(p_te, prep.test.targets)),
            pooled_rmse(p_tr, prep.train.targets), pooled_rmse(p_te, prep.test.targets),
            time.perf_counter() - start)
        if task["checkpoint_dir"] is not None:
            meta = {"dataset": ds, "run": run, "seed": seed, "embed": task["embed"],
                    "scale": [prep.scale.min, prep.scale.max], "train": cfg.to_dict()}
            save_checkpoint(model, Path(task["checkpoint_dir"]) / _checkpoint_name(ds, kind, run), meta)
        return result
    except Exception as exc:  # noqa: BLE001 - every stage failure is recorded against its run
        return RunResult(ds, kind, run, seed, wall_time=time.perf_counter() - start,
                         error=f"{type(exc).__name__}: {exc}")


def worker_count(n_tasks: int) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        limit = os.cpu_count() or 1
    else:
        try:
            limit = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
        if limit < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return max(1, min(limit, n_tasks))


def summarize(dataset: str, model: str, results: list, ci_method: str = "t") -> CellSummary:
    ok = [r for r in results if r.ok]
    failures = tuple((r.run, r.error) for r in results if not r.ok)
    base = CellSummary(dataset, model, len(results), len(ok), failures)
    if not ok:
        return base

    def stats_of(vectors):
        if len(vectors) == 1:
            v = tuple(float(x) for x in np.ravel(vectors[0]))
            return v, None
        mean, ci = aggregate(vectors, ci_method)
        return tuple(mean.tolist()), tuple(ci.tolist())

    tr_m, tr_c = stats_of([r.train.rmse for r in ok])
    te_m, te_c = stats_of([r.test.rmse for r in ok])
    o_tr_m, o_tr_c = stats_of([[r.train_overall] for r in ok])
    o_te_m, o_te_c = stats_of([[r.test_overall] for r in ok])
    return replace(base, train_mean=tr_m, train_ci=tr_c, test_mean=te_m, test_ci=te_c,
                   train_overall=(o_tr_m[0], o_tr_c[0] if o_tr_c else None),
                   test_overall=(o_te_m[0], o_te_c[0] if o_te_c else None))


def run_experiment(datasets, models, runs: int, train_config: TrainConfig | None = None,
                   embed_config: EmbedConfig | None = None, master_seed: int = 0,
                   ci_method: str = "t", data_directory=None, checkpoint_dir=None,
                   workers: int | None = None) -> ExperimentReport:
    """Train every (dataset, model, run) combination and aggregate the errors.

    Output depends only on the arguments: each run is seeded from
    ``derive_seed`` and results are collected in task order whatever the
    number of workers.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    datasets, models = list(datasets), list(models)
    if not datasets or not models:
        raise ValueError("need at least one dataset and one model")
    for m in models:
        if m not in KINDS:
            raise ValueError(f"unknown model kind {m!r}; choose from {', '.join(KINDS)}")
    train_config = train_config or TrainConfig()
    embed_config = embed_config or EmbedConfig()
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)

    prepared, load_errors = {}, {}
    for ds in datasets:
        try:
            prepared[ds] = prepare(load_series(ds, embed_config.truncate, data_directory), embed_config)
        except Exception as exc:  # noqa: BLE001 - reported per run below
            load_errors[ds] = f"{type(exc).__name__}: {exc}"
            log.error("dataset %s unavailable: %s", ds, load_errors[ds])

    tasks, results = [], {}
    for ds in datasets:
        for m in models:
            for r in range(runs):
                seed = derive_seed(master_seed, ds, m, r)
                if ds in load_errors:
                    results[(ds, m, r)] = RunResult(ds, m, r, seed, error=load_errors[ds])
                    continue
                tasks.append({"dataset": ds, "model": m, "run": r, "seed": seed,
                              "prepared": prepared[ds], "train_config": train_config,
                              "embed": embed_config.to_dict(),
                              "checkpoint_dir": None if checkpoint_dir is None else str(checkpoint_dir)})

    n_workers = workers if workers is not None else worker_count(len(tasks))
    if n_workers <= 1 or len(tasks) <= 1:
        outputs = []
        for t in tasks:
            outputs.append(_execute(t))
            _log_result(outputs[-1])
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outputs = []
            for res in pool.map(_execute, tasks):
                outputs.append(res)
                _log_result(res)
    for t, res in zip(tasks, outputs):
        results[(t["dataset"], t["model"], t["run"])] = res

    ordered = [results[(ds, m, r)] for ds in datasets for m in models for r in range(runs)]
    cells = [summarize(ds, m, [x for x in ordered if x.dataset == ds and x.model == m], ci_method)
             for ds in datasets for m in models]
    config = {"datasets": datasets, "models": models, "runs": runs, "master_seed": master_seed,
              "embed": embed_config.to_dict(), "train": _train_snapshot(train_config),
              "ci_method": ci_method, "backend": kernels.BACKEND}
    return ExperimentReport(config, cells, ordered)


def _train_snapshot(cfg: TrainConfig) -> dict:
    d = cfg.to_dict()
    # optimizer and its default rate follow the model kind; the shuffle seed follows the run seed
    for key in ("optimizer", "shuffle_seed"):
        d.pop(key)
    d["learning_rate"] = cfg.learning_rate
    return d


def _log_result(res: RunResult):
    if res.ok:
        log.info("%s/%s run %d: test RMSE %.4f (%.1fs)", res.dataset, res.model, res.run,
                 res.test_overall, res.wall_time)
    else:
        log.warning("%s/%s run %d failed: %s", res.dataset, res.model, res.run, res.error)


def rank_models(report: ExperimentReport) -> tuple[dict, dict]:
    """Tied-min rank table over the report's models and the mean rank per model."""
    scores = {}
    for ds in report.datasets:
        scores[ds] = {}
        for m in report.models:
            try:
                scores[ds][m] = report.cell(ds, m).score
            except KeyError:
                raise MissingCellError(f"no cell for dataset {ds!r}, model {m!r}") from None
    table = rank_table(scores)
    return table, mean_ranks(table)
