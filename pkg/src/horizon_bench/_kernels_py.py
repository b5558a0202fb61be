"""Pure-numpy recurrence kernels; the fallback for the compiled ``_kernels``.

Only the sequential part of each layer lives here.  Input projections
(``x_t @ U + b``) arrive precomputed for every step as ``xu`` and the
weight gradients are formed afterwards with one matrix product each, see
``kernels``.  Shapes are (batch, steps, width); LSTM gate blocks are
ordered input, forget, output, candidate.
"""

import numpy as np


def _sigmoid(z):
    return 0.5 * np.tanh(0.5 * z) + 0.5


def lstm_forward(xu, W, cell_sigmoid=False):
    B, S, _ = xu.shape
    H = W.shape[0]
    hs = np.zeros((B, S, H))
    cs = np.zeros((B, S, H))
    gates = np.zeros((B, S, 4 * H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(S):
        z = xu[:, t] + h @ W
        g = gates[:, t]
        g[:, : 3 * H] = _sigmoid(z[:, : 3 * H])
        g[:, 3 * H :] = np.tanh(z[:, 3 * H :])
        c = g[:, H : 2 * H] * c + g[:, :H] * g[:, 3 * H :]
        if cell_sigmoid:
            c = _sigmoid(c)
        h = np.tanh(c) * g[:, 2 * H : 3 * H]
        hs[:, t] = h
        cs[:, t] = c
    return hs, cs, gates


def lstm_backward(W, cs, gates, dhs, cell_sigmoid=False):
    """Gradient w.r.t. the gate pre-activations at every step."""
    B, S, H = cs.shape
    dz_all = np.empty((B, S, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    zeros = np.zeros((B, H))
    for t in range(S - 1, -1, -1):
        g = gates[:, t]
        i, f, o, cand = g[:, :H], g[:, H : 2 * H], g[:, 2 * H : 3 * H], g[:, 3 * H :]
        c = cs[:, t]
        tc = np.tanh(c)
        dh = dhs[:, t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        if cell_sigmoid:
            dc = dc * c * (1.0 - c)
        c_prev = cs[:, t - 1] if t > 0 else zeros
        dz = dz_all[:, t]
        dz[:, :H] = dc * cand * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H :] = dc * i * (1.0 - cand * cand)
        dc_next = dc * f
        dh_next = dz @ W.T
    return dz_all


def elman_forward(xw, U):
    B, S, H = xw.shape
    hs = np.zeros((B, S, H))
    h = np.zeros((B, H))
    for t in range(S):
        h = np.tanh(xw[:, t] + h @ U)
        hs[:, t] = h
    return hs


def elman_backward(U, hs, dhs):
    """Gradient w.r.t. the hidden pre-activations at every step."""
    B, S, H = hs.shape
    da_all = np.empty((B, S, H))
    dh_next = np.zeros((B, H))
    for t in range(S - 1, -1, -1):
        h = hs[:, t]
        da = (dhs[:, t] + dh_next) * (1.0 - h * h)
        da_all[:, t] = da
        dh_next = da @ U.T
    return da_all
