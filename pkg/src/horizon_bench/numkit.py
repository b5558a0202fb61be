"""Numerical primitives shared by every other module.

Matrices are plain ``float64`` numpy arrays; the helpers here add the
shape/finiteness checks the rest of the package relies on.  The random
generator is a counter-based SplitMix64 so that a seed produces the same
stream on every platform, independent of numpy's own generators.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")


class DimensionError(ValueError):
    """Operand shapes violate an operation's precondition."""


class NonFiniteError(FloatingPointError):
    """A computation produced NaN or Inf."""


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix64(value: int) -> int:
    """SplitMix64 finaliser applied to a single Python int."""
    return int(_mix64(np.array([value & _MASK64], dtype=np.uint64))[0])


class Rng:
    """Counter-based generator: draw ``i`` is ``mix64(key + (i + 1) * golden)``.

    The key is derived from ``(seed, stream)``, so substreams of one seed are
    independent sequences rather than offsets into a shared one.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.stream = int(stream)
        self._key = mix64(self.seed ^ mix64((self.stream * 0x632BE59BD9B4E019 + 1) & _MASK64))
        self._counter = 0

    def substream(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)

    def next_uint64(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix64(np.uint64(self._key) + idx * _GOLDEN)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return low + (high - low) * u

    def normal(self, n: int) -> np.ndarray:
        """Standard normal draws by Box-Muller."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n]

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.next_uint64(n), kind="stable")


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally checking the shape."""
    m = np.array(data, dtype=np.float64, ndmin=2)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got {m.ndim} dimensions")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"expected {cols} columns, got {m.shape[1]}")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {what}")
    return x


def sigmoid(x):
    # split by sign so exp never overflows
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def activation(kind: str, x):
    if kind == "relu":
        return np.maximum(x, 0.0) if isinstance(x, np.ndarray) else max(float(x), 0.0)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "identity":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def activation_deriv(kind: str, x):
    """Pointwise derivative evaluated at the pre-activation ``x``.

    The ReLU derivative at exactly 0 is taken to be 0.
    """
    if kind == "relu":
        return (np.asarray(x) > 0).astype(np.float64) if isinstance(x, np.ndarray) else float(x > 0)
    if kind == "sigmoid":
        s = sigmoid(x)
        return s * (1.0 - s)
    if kind == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    if kind == "identity":
        return np.ones_like(x, dtype=np.float64) if isinstance(x, np.ndarray) else 1.0
    raise ValueError(f"unknown activation {kind!r}")


def glorot_init(rng: Rng, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise DimensionError(f"glorot_init needs positive dimensions, got {rows}x{cols}")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(rows * cols, -limit, limit).reshape(rows, cols)


def finite_diff_grad(loss_fn: Callable[[np.ndarray], float], params, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``loss_fn`` at ``params``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    theta = np.array(params, dtype=np.float64).ravel()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + eps
        f_plus = float(loss_fn(theta.copy()))
        theta[i] = orig - eps
        f_minus = float(loss_fn(theta.copy()))
        theta[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteError(f"loss is not finite when perturbing coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    """max |a-b| / max(|a|+|b|, floor), the usual gradient-check statistic."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(b), floor)
    return float(np.max(np.abs(a - b) / denom))
