"""Recurrent layer passes built on a selectable recurrence backend.

The sequential loops come from the compiled ``_kernels`` extension when it
imports, else from ``_kernels_py``; ``HORIZON_BENCH_BACKEND`` (``auto``,
``cython`` or ``python``) overrides the choice.  Everything that is not
sequential in time (input projections, weight gradients) is batched into
single matrix products here, shared by both backends.
"""

import os

import numpy as np

from . import _kernels_py

_choice = os.environ.get("HORIZON_BENCH_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "python"):
    raise ImportError(f"HORIZON_BENCH_BACKEND must be auto, cython or python, not {_choice!r}")

_impl = _kernels_py
BACKEND = "python"
if _choice != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _choice == "cython":
            raise
    else:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name):
    """Recurrence module for ``name`` regardless of the import-time selection."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def _project(x, M, b):
    B, S, n_in = x.shape
    return (x.reshape(B * S, n_in) @ M + b).reshape(B, S, M.shape[1])


def _shift(hs):
    # h_{t-1} for every step, zeros at t=0
    prev = np.zeros_like(hs)
    prev[:, 1:] = hs[:, :-1]
    return prev


def lstm_forward(x, U, W, b, cell_sigmoid=False, impl=None):
    """Returns (hidden states, cell states, gate activations), each per step."""
    impl = impl or _impl
    return impl.lstm_forward(_project(x, U, b), W, cell_sigmoid)


def lstm_backward(x, U, W, hs, cs, gates, dhs, cell_sigmoid=False, impl=None):
    """Backpropagation through time; returns (dx, dU, dW, db)."""
    impl = impl or _impl
    B, S, n_in = x.shape
    dz = impl.lstm_backward(W, cs, gates, np.ascontiguousarray(dhs), cell_sigmoid)
    G = dz.shape[2]
    flat = dz.reshape(B * S, G)
    dU = x.reshape(B * S, n_in).T @ flat
    dW = _shift(hs).reshape(B * S, W.shape[0]).T @ flat
    db = flat.sum(axis=0)
    dx = (flat @ U.T).reshape(B, S, n_in)
    return dx, dU, dW, db


def elman_forward(x, W, U, b, impl=None):
    impl = impl or _impl
    return impl.elman_forward(_project(x, W, b), U)


def elman_backward(x, W, U, hs, dhs, impl=None):
    """Backpropagation through time; returns (dx, dW, dU, db)."""
    impl = impl or _impl
    B, S, n_in = x.shape
    H = U.shape[0]
    da = impl.elman_backward(U, hs, np.ascontiguousarray(dhs))
    flat = da.reshape(B * S, H)
    dW = x.reshape(B * S, n_in).T @ flat
    dU = _shift(hs).reshape(B * S, H).T @ flat
    db = flat.sum(axis=0)
    dx = (flat @ W.T).reshape(B, S, n_in)
    return dx, dW, dU, db
