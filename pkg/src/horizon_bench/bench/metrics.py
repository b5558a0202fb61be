"""Per-horizon RMSE, confidence intervals over seeds, and model ranking."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..numkit import DimensionError, as_matrix


class AggregationError(ValueError):
    pass


class MissingCellError(KeyError):
    pass


def rmse_per_horizon(pred, target) -> np.ndarray:
    """RMSE of each target column (one value per prediction horizon)."""
    pred = as_matrix(pred)
    target = as_matrix(target)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.shape[0] < 1:
        raise DimensionError("need at least one row")
    return np.sqrt(np.mean((target - pred) ** 2, axis=0))


def pooled_rmse(pred, target) -> float:
    """RMSE over every cell, all horizons pooled together."""
    pred = as_matrix(pred)
    target = as_matrix(target)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return float(np.sqrt(np.mean((target - pred) ** 2)))


def ci_half_width(values, method: str = "t") -> float:
    """Half-width of the 95% interval for the mean of ``values``.

    ``method='t'`` uses Student-t with n-1 degrees of freedom,
    ``'normal'`` the 1.96 normal approximation.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 2:
        raise AggregationError(f"a confidence interval needs at least 2 runs, got {n}")
    s = float(np.std(x, ddof=1))
    if method == "t":
        q = float(stats.t.ppf(0.975, n - 1))
    elif method == "normal":
        q = float(stats.norm.ppf(0.975))
    else:
        raise ValueError(f"unknown CI method {method!r}")
    return q * s / math.sqrt(n)


def aggregate(runs, method: str = "t") -> tuple[np.ndarray, np.ndarray]:
    """Column-wise mean and 95% CI half-width over runs.

    ``runs`` is a sequence of equal-length vectors (one per run).
    """
    m = np.array([np.asarray(r, dtype=np.float64).ravel() for r in runs])
    if m.shape[0] < 2:
        raise AggregationError(f"aggregation needs at least 2 runs, got {m.shape[0]}")
    mean = m.mean(axis=0)
    ci = np.array([ci_half_width(m[:, j], method) for j in range(m.shape[1])])
    return mean, ci


def rank_table(scores: dict) -> dict:
    """Rank models within each dataset; lower score is better.

    ``scores`` maps dataset -> {model: score}.  Ties share the minimum rank
    and the following rank is skipped.
    """
    out = {}
    for dataset, by_model in scores.items():
        models = list(by_model)
        vals = np.array([by_model[m] for m in models], dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            bad = [m for m, v in zip(models, vals) if not np.isfinite(v)]
            raise MissingCellError(f"dataset {dataset!r} has no score for {', '.join(bad)}")
        ranks = stats.rankdata(vals, method="min")
        out[dataset] = {m: int(r) for m, r in zip(models, ranks)}
    return out


def mean_ranks(table: dict) -> dict:
    models = []
    for row in table.values():
        for m in row:
            if m not in models:
                models.append(m)
    result = {}
    for m in models:
        vals = []
        for dataset, row in table.items():
            if m not in row:
                raise MissingCellError(f"model {m!r} missing from dataset {dataset!r}")
            vals.append(row[m])
        result[m] = float(np.mean(vals))
    return result


def spearman(x, y) -> float:
    return float(stats.spearmanr(x, y).statistic)
