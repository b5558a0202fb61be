"""The seven benchmark configurations with exact forward/backward passes.

Every model keeps all of its parameters in one flat float64 vector;
named arrays (``model.p["W1"]`` etc.) are views into it, so optimizers
update the flat vector in place and checkpointing is a single array dump.

Input windows arrive as a (batch, D) matrix.  FNN reads the row as one
feature vector, the recurrent models read it as D time steps with one
feature each, and the CNN as a single channel of length D.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .numkit import DimensionError, NonFiniteError, Rng, as_matrix, glorot_init

KINDS = ("fnn_sgd", "fnn_adam", "rnn", "lstm", "bd_lstm", "ed_lstm", "cnn")

DISPLAY_NAMES = {
    "fnn_adam": "FNN-Adam",
    "fnn_sgd": "FNN-SGD",
    "lstm": "LSTM",
    "bd_lstm": "BD-LSTM",
    "ed_lstm": "ED-LSTM",
    "rnn": "RNN",
    "cnn": "CNN",
}

CHECKPOINT_MAGIC = "horizon-bench-checkpoint"


class UnknownModelError(ValueError):
    pass


class CacheMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int = 5
    output_dim: int = 10
    hidden: int = 10
    filters: int = 64
    kernel: int = 3
    pool: int = 2
    cnn_dense: int = 10
    cell_sigmoid: bool = False  # wrap the LSTM cell update in a sigmoid, as printed in some sources

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownModelError(f"unknown model kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if min(self.input_dim, self.output_dim, self.hidden) < 1:
            raise ValueError("model dimensions must be positive")
        if self.kind == "cnn" and (self.input_dim - self.kernel + 1) // self.pool < 1:
            raise ValueError(f"CNN input of width {self.input_dim} too short for kernel {self.kernel} and pool {self.pool}")

    @property
    def optimizer(self) -> str:
        return "sgd" if self.kind == "fnn_sgd" else "adam"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


class Model:
    """Base class: flat parameter storage plus the forward/backward contract."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self._layout = self.layout()
        offsets = {}
        pos = 0
        for name, shape, _ in self._layout:
            size = int(np.prod(shape))
            offsets[name] = (pos, pos + size, shape)
            pos += size
        self._offsets = offsets
        self.theta = np.zeros(pos)
        self.p = self._views(self.theta)

    # -- layout ---------------------------------------------------------
    def layout(self) -> list:
        """Ordered ``(name, shape, init)`` triples; init is 'w', 'gates' or 'b'."""
        raise NotImplementedError

    def _views(self, flat: np.ndarray) -> dict:
        return {name: flat[a:b].reshape(shape) for name, (a, b, shape) in self._offsets.items()}

    def initialize(self, rng: Rng) -> "Model":
        for name, shape, init in self._layout:
            if init == "w":
                self.p[name][...] = glorot_init(rng, *shape)
            elif init == "gates":
                # one Glorot draw per gate matrix, stored side by side
                rows, cols = shape
                h = cols // 4
                for g in range(4):
                    self.p[name][:, g * h : (g + 1) * h] = glorot_init(rng, rows, h)
            else:
                self.p[name][...] = 0.0
        return self

    @property
    def n_params(self) -> int:
        return self.theta.size

    def segment(self, name: str) -> slice:
        a, b, _ = self._offsets[name]
        return slice(a, b)

    # -- passes ---------------------------------------------------------
    def _check_inputs(self, inputs) -> np.ndarray:
        x = as_matrix(inputs)
        if x.shape[1] != self.spec.input_dim:
            raise DimensionError(f"{self.spec.kind} expects input width {self.spec.input_dim}, got {x.shape[1]}")
        return x

    def forward(self, inputs):
        x = self._check_inputs(inputs)
        pred, cache = self._forward(x)
        cache["_model"] = id(self)
        cache["_n"] = x.shape[0]
        return pred, cache

    def predict(self, inputs) -> np.ndarray:
        return self.forward(inputs)[0]

    def backward(self, cache: dict, loss_grad) -> np.ndarray:
        if cache.get("_model") != id(self):
            raise CacheMismatchError("cache was produced by a different model")
        dy = as_matrix(loss_grad)
        if dy.shape != (cache["_n"], self.spec.output_dim):
            raise CacheMismatchError(f"loss gradient shape {dy.shape} does not match forward batch "
                                     f"({cache['_n']}, {self.spec.output_dim})")
        grad = np.zeros_like(self.theta)
        self._backward(cache, dy, self._views(grad))
        return grad

    def _forward(self, x):
        raise NotImplementedError

    def _backward(self, cache, dy, g):
        raise NotImplementedError


def _finite(a: np.ndarray, layer: str) -> np.ndarray:
    if not np.isfinite(a).all():
        raise NonFiniteError(f"non-finite activations in layer {layer!r}")
    return a


def _dense_back(x, dout, g, wname, bname):
    g[wname] += x.T @ dout
    g[bname] += dout.sum(axis=0)


class FNN(Model):
    """Input -> hidden (ReLU) -> linear output."""

    hidden_activation = "relu"

    def layout(self):
        s = self.spec
        return [("W1", (s.input_dim, s.hidden), "w"), ("b1", (s.hidden,), "b"),
                ("W2", (s.hidden, s.output_dim), "w"), ("b2", (s.output_dim,), "b")]

    def _forward(self, x):
        p = self.p
        a1 = x @ p["W1"] + p["b1"]
        if self.hidden_activation == "relu":
            h1 = np.maximum(a1, 0.0)
        else:
            h1 = a1
        _finite(h1, "hidden")
        y = _finite(h1 @ p["W2"] + p["b2"], "output")
        return y, {"x": x, "a1": a1, "h1": h1}

    def _backward(self, c, dy, g):
        p = self.p
        _dense_back(c["h1"], dy, g, "W2", "b2")
        dh1 = dy @ p["W2"].T
        da1 = dh1 * (c["a1"] > 0) if self.hidden_activation == "relu" else dh1
        _dense_back(c["x"], da1, g, "W1", "b1")


class LinearFNN(FNN):
    """FNN with identity hidden activation; a linear model used as a test oracle."""

    hidden_activation = "identity"


def _seq(x):
    return np.ascontiguousarray(x[:, :, None])


def _lstm_layout(prefix, n_in, h):
    return [(f"{prefix}U", (n_in, 4 * h), "gates"), (f"{prefix}W", (h, 4 * h), "gates"),
            (f"{prefix}b", (4 * h,), "b")]


class RNN(Model):
    """Two stacked Elman layers; the output map reads the last hidden state."""

    def layout(self):
        s = self.spec
        h = s.hidden
        return [("W1", (1, h), "w"), ("U1", (h, h), "w"), ("b1", (h,), "b"),
                ("W2", (h, h), "w"), ("U2", (h, h), "w"), ("b2", (h,), "b"),
                ("Wy", (h, s.output_dim), "w"), ("by", (s.output_dim,), "b")]

    def _forward(self, x):
        p = self.p
        xs = _seq(x)
        hs1 = _finite(kernels.elman_forward(xs, p["W1"], p["U1"], p["b1"]), "elman1")
        hs2 = _finite(kernels.elman_forward(hs1, p["W2"], p["U2"], p["b2"]), "elman2")
        y = _finite(hs2[:, -1] @ p["Wy"] + p["by"], "output")
        return y, {"xs": xs, "hs1": hs1, "hs2": hs2}

    def _backward(self, c, dy, g):
        p = self.p
        hs2 = c["hs2"]
        _dense_back(hs2[:, -1], dy, g, "Wy", "by")
        dhs2 = np.zeros_like(hs2)
        dhs2[:, -1] = dy @ p["Wy"].T
        dhs1, dW2, dU2, db2 = kernels.elman_backward(c["hs1"], p["W2"], p["U2"], hs2, dhs2)
        g["W2"] += dW2
        g["U2"] += dU2
        g["b2"] += db2
        _, dW1, dU1, db1 = kernels.elman_backward(c["xs"], p["W1"], p["U1"], c["hs1"],
                                                   np.ascontiguousarray(dhs1))
        g["W1"] += dW1
        g["U1"] += dU1
        g["b1"] += db1


class LSTM(Model):
    """One LSTM layer; the output map reads the final hidden state."""

    def layout(self):
        s = self.spec
        return _lstm_layout("", 1, s.hidden) + [("Wy", (s.hidden, s.output_dim), "w"),
                                                 ("by", (s.output_dim,), "b")]

    def _run(self, xs, prefix, tag):
        p = self.p
        hs, cs, gates = kernels.lstm_forward(xs, p[prefix + "U"], p[prefix + "W"], p[prefix + "b"],
                                             self.spec.cell_sigmoid)
        _finite(hs, tag)
        return {"xs": xs, "hs": hs, "cs": cs, "gates": gates}

    def _back(self, run, dhs, prefix, g):
        p = self.p
        dx, dU, dW, db = kernels.lstm_backward(run["xs"], p[prefix + "U"], p[prefix + "W"], run["hs"],
                                               run["cs"], run["gates"], dhs, self.spec.cell_sigmoid)
        g[prefix + "U"] += dU
        g[prefix + "W"] += dW
        g[prefix + "b"] += db
        return dx

    def _forward(self, x):
        run = self._run(_seq(x), "", "lstm")
        y = _finite(run["hs"][:, -1] @ self.p["Wy"] + self.p["by"], "output")
        return y, {"run": run}

    def _backward(self, c, dy, g):
        hs = c["run"]["hs"]
        _dense_back(hs[:, -1], dy, g, "Wy", "by")
        dhs = np.zeros_like(hs)
        dhs[:, -1] = dy @ self.p["Wy"].T
        self._back(c["run"], dhs, "", g)


class BDLSTM(LSTM):
    """Forward and backward LSTM layers over the same window, final states concatenated."""

    def layout(self):
        s = self.spec
        h = s.hidden
        return (_lstm_layout("f_", 1, h) + _lstm_layout("b_", 1, h)
                + [("Wy", (2 * h, s.output_dim), "w"), ("by", (s.output_dim,), "b")])

    def _forward(self, x):
        xs = _seq(x)
        fwd = self._run(xs, "f_", "lstm_forward")
        bwd = self._run(np.ascontiguousarray(xs[:, ::-1]), "b_", "lstm_backward")
        merged = np.concatenate([fwd["hs"][:, -1], bwd["hs"][:, -1]], axis=1)
        y = _finite(merged @ self.p["Wy"] + self.p["by"], "output")
        return y, {"fwd": fwd, "bwd": bwd, "merged": merged}

    def _backward(self, c, dy, g):
        h = self.spec.hidden
        _dense_back(c["merged"], dy, g, "Wy", "by")
        dm = dy @ self.p["Wy"].T
        for key, prefix, part in (("fwd", "f_", dm[:, :h]), ("bwd", "b_", dm[:, h:])):
            run = c[key]
            dhs = np.zeros_like(run["hs"])
            dhs[:, -1] = part
            self._back(run, dhs, prefix, g)


class EDLSTM(LSTM):
    """Encoder LSTM -> latent repeated H times -> decoder LSTM -> shared per-step affine map."""

    def layout(self):
        s = self.spec
        h = s.hidden
        return (_lstm_layout("e_", 1, h) + _lstm_layout("d_", h, h)
                + [("Wy", (h, 1), "w"), ("by", (1,), "b")])

    def _forward(self, x):
        H = self.spec.output_dim
        enc = self._run(_seq(x), "e_", "encoder")
        latent = enc["hs"][:, -1]
        dec_in = np.ascontiguousarray(np.repeat(latent[:, None, :], H, axis=1))
        dec = self._run(dec_in, "d_", "decoder")
        y = _finite(dec["hs"] @ self.p["Wy"][:, 0] + self.p["by"][0], "output")
        return y, {"enc": enc, "dec": dec}

    def _backward(self, c, dy, g):
        enc, dec = c["enc"], c["dec"]
        hs_d = dec["hs"]
        g["Wy"][:, 0] += np.einsum("nth,nt->h", hs_d, dy)
        g["by"][0] += dy.sum()
        dhs_d = np.ascontiguousarray(dy[:, :, None] * self.p["Wy"][:, 0][None, None, :])
        dx_dec = self._back(dec, dhs_d, "d_", g)
        dhs_e = np.zeros_like(enc["hs"])
        dhs_e[:, -1] = dx_dec.sum(axis=1)
        self._back(enc, dhs_e, "e_", g)


class CNN(Model):
    """Conv1d (valid, ReLU) -> max-pool -> flatten -> dense ReLU -> linear output."""

    def layout(self):
        s = self.spec
        flat = self.pooled_len * s.filters
        return [("K", (s.kernel, s.filters), "w"), ("bk", (s.filters,), "b"),
                ("W1", (flat, s.cnn_dense), "w"), ("b1", (s.cnn_dense,), "b"),
                ("W2", (s.cnn_dense, s.output_dim), "w"), ("b2", (s.output_dim,), "b")]

    @property
    def conv_len(self) -> int:
        return self.spec.input_dim - self.spec.kernel + 1

    @property
    def pooled_len(self) -> int:
        return self.conv_len // self.spec.pool

    def _forward(self, x):
        s, p = self.spec, self.p
        L, Lp, w = self.conv_len, self.pooled_len, s.pool
        patches = np.stack([x[:, l : l + s.kernel] for l in range(L)], axis=1)  # (n, L, k)
        a = patches @ p["K"] + p["bk"]
        r = _finite(np.maximum(a, 0.0), "conv")
        windows = r[:, : Lp * w].reshape(r.shape[0], Lp, w, s.filters)
        arg = windows.argmax(axis=2)  # ties resolve to the first element
        pooled = np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :]
        flat = pooled.reshape(r.shape[0], Lp * s.filters)
        a1 = flat @ p["W1"] + p["b1"]
        h1 = _finite(np.maximum(a1, 0.0), "dense")
        y = _finite(h1 @ p["W2"] + p["b2"], "output")
        return y, {"patches": patches, "a": a, "arg": arg, "flat": flat, "a1": a1, "h1": h1}

    def _backward(self, c, dy, g):
        s, p = self.spec, self.p
        L, Lp, w = self.conv_len, self.pooled_len, s.pool
        n = dy.shape[0]
        _dense_back(c["h1"], dy, g, "W2", "b2")
        da1 = (dy @ p["W2"].T) * (c["a1"] > 0)
        _dense_back(c["flat"], da1, g, "W1", "b1")
        dpooled = (da1 @ p["W1"].T).reshape(n, Lp, s.filters)
        dwin = np.zeros((n, Lp, w, s.filters))
        np.put_along_axis(dwin, c["arg"][:, :, None, :], dpooled[:, :, None, :], axis=2)
        dr = np.zeros((n, L, s.filters))
        dr[:, : Lp * w] = dwin.reshape(n, Lp * w, s.filters)
        da = dr * (c["a"] > 0)
        g["K"] += c["patches"].reshape(n * L, s.kernel).T @ da.reshape(n * L, s.filters)
        g["bk"] += da.sum(axis=(0, 1))


_CLASSES = {"fnn_sgd": FNN, "fnn_adam": FNN, "rnn": RNN, "lstm": LSTM,
            "bd_lstm": BDLSTM, "ed_lstm": EDLSTM, "cnn": CNN}


def build(spec: ModelSpec | str, rng: Rng | None = None, **overrides) -> Model:
    """Construct and (when ``rng`` is given) Glorot-initialise a model."""
    if isinstance(spec, str):
        spec = ModelSpec(spec, **overrides)
    elif overrides:
        spec = replace(spec, **overrides)
    try:
        cls = _CLASSES[spec.kind]
    except KeyError:
        raise UnknownModelError(f"unknown model kind {spec.kind!r}") from None
    model = cls(spec)
    if rng is not None:
        model.initialize(rng)
    return model


def parameters(model: Model) -> np.ndarray:
    """The model's flat parameter vector (a live view, not a copy)."""
    return model.theta


def load_parameters(model: Model, flat) -> Model:
    flat = np.asarray(flat, dtype=np.float64).ravel()
    if flat.size != model.n_params:
        raise DimensionError(f"{model.spec.kind} has {model.n_params} parameters, got a vector of {flat.size}")
    model.theta[...] = flat
    return model


def save_checkpoint(model: Model, path, meta: dict | None = None) -> None:
    """One JSON header line followed by the parameters as little-endian float64."""
    header = {"format": CHECKPOINT_MAGIC, "version": 1, "spec": model.spec.to_dict(),
              "n_params": model.n_params, "meta": meta or {}}
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(model.theta.astype("<f8").tobytes())


def load_checkpoint(path) -> tuple[Model, dict]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: not a checkpoint file")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("format") != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    model = build(ModelSpec.from_dict(header["spec"]))
    params = np.frombuffer(raw[nl + 1 :], dtype="<f8")
    load_parameters(model, params)
    return model, header.get("meta", {})
