"""Scaling, delay embedding into direct multi-output pairs, and splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seriesgen import TimeSeries


class DegenerateScaleError(ValueError):
    pass


class SeriesTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class ScaleParams:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateScaleError(f"scale needs max > min, got min={self.min} max={self.max}")


@dataclass(frozen=True)
class EmbeddedDataset:
    inputs: np.ndarray   # (n_samples, D)
    targets: np.ndarray  # (n_samples, H)
    D: int
    T: int
    H: int

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def rows(self, idx) -> "EmbeddedDataset":
        return EmbeddedDataset(self.inputs[idx], self.targets[idx], self.D, self.T, self.H)


def fit_scale(series: TimeSeries, values=None) -> tuple[TimeSeries, ScaleParams]:
    """Min-max scale ``series`` into [0, 1].

    ``values`` optionally supplies the data the bounds are fitted on (e.g.
    a training prefix); the whole series is transformed either way.
    """
    ref = series.values if values is None else np.asarray(values, dtype=np.float64)
    lo, hi = float(np.min(ref)), float(np.max(ref))
    if not hi > lo:
        raise DegenerateScaleError(f"series {series.name!r} is constant; cannot scale")
    params = ScaleParams(lo, hi)
    scaled = (series.values - lo) / (hi - lo)
    return TimeSeries(series.name, scaled, {**series.source, "scale": [lo, hi]}), params


def inverse_scale(values, params: ScaleParams):
    return np.asarray(values, dtype=np.float64) * (params.max - params.min) + params.min


def min_length(D: int, T: int, H: int) -> int:
    return (D - 1) * T + H + 1


def embed(series, D: int = 5, T: int = 1, H: int = 10) -> EmbeddedDataset:
    """Sliding windows ``x[i], x[i+T], ..., x[i+(D-1)T]`` with the next H values as targets."""
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64).ravel()
    if D < 1 or T < 1 or H < 1:
        raise ValueError(f"D, T, H must be >= 1, got D={D} T={T} H={H}")
    N = x.size
    need = min_length(D, T, H)
    if N < need:
        raise SeriesTooShortError(f"series of length {N} too short: D={D}, T={T}, H={H} need at least {need}")
    n = N - (D - 1) * T - H
    base = np.arange(n)[:, None]
    in_idx = base + T * np.arange(D)[None, :]
    last = (D - 1) * T
    tgt_idx = base + last + 1 + np.arange(H)[None, :]
    return EmbeddedDataset(x[in_idx].copy(), x[tgt_idx].copy(), D, T, H)


def split(dataset: EmbeddedDataset, train_frac: float = 0.6) -> tuple[EmbeddedDataset, EmbeddedDataset]:
    if not 0 < train_frac < 1:
        raise ValueError(f"train_frac must lie strictly between 0 and 1, got {train_frac}")
    n = len(dataset)
    cut = math.floor(train_frac * n)
    if cut == 0 or cut == n:
        raise ValueError(f"split of {n} samples at {train_frac} leaves one side empty")
    return dataset.rows(slice(0, cut)), dataset.rows(slice(cut, n))
