"""Loss, optimizers and the mini-batch training loop."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import EmbeddedDataset
from .numkit import DimensionError, NonFiniteError, Rng, as_matrix

SHUFFLE_STREAM = 1


class TrainingError(RuntimeError):
    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean squared error over every cell and its gradient w.r.t. ``pred``."""
    pred = as_matrix(pred)
    target = as_matrix(target)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


def sgd_step(params, grads, lr: float) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise DimensionError(f"parameter shape {params.shape} != gradient shape {grads.shape}")
    return params - lr * grads


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **hyper)


def adam_step(state: AdamState, params, grads) -> tuple[AdamState, np.ndarray]:
    """One Adam update; the counter is incremented before bias correction."""
    params = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if params.shape != g.shape or state.m.shape != g.shape:
        raise DimensionError("Adam state, parameters and gradients must have equal lengths")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return state, params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def clip_by_global_norm(grads: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.sqrt(np.dot(grads, grads)))
    if norm > max_norm:
        return grads * (max_norm / norm)
    return grads


@dataclass
class TrainConfig:
    max_epochs: int = 1000
    batch_size: int = 32
    learning_rate: float | None = None  # None: 0.001 for Adam, 0.01 for SGD
    optimizer: str = "adam"
    shuffle_seed: int = 0
    shuffle: bool = True
    gradient_clip: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.gradient_clip is not None and not self.gradient_clip > 0:
            raise ValueError("gradient_clip must be positive")

    @property
    def lr(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 0.001 if self.optimizer == "adam" else 0.01

    def to_dict(self) -> dict:
        d = asdict(self)
        d["learning_rate"] = self.lr
        return d


def train(model, train_set: EmbeddedDataset, config: TrainConfig) -> tuple[object, list]:
    """Run exactly ``config.max_epochs`` epochs of mini-batch training in place.

    Returns the model and the per-epoch mean training loss, where each
    batch's loss is measured before that batch's update.
    """
    n = len(train_set)
    if n == 0:
        raise ValueError("training set is empty")
    X, Y = train_set.inputs, train_set.targets
    rng = Rng(config.shuffle_seed, SHUFFLE_STREAM)
    lr = config.lr
    adam = None
    if config.optimizer == "adam":
        adam = AdamState.fresh(model.n_params, lr=lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    bs = config.batch_size
    history = []
    for epoch in range(config.max_epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for b, start in enumerate(range(0, n, bs)):
            idx = order[start : start + bs]
            try:
                pred, cache = model.forward(X[idx])
            except NonFiniteError as exc:
                raise TrainingError(f"epoch {epoch}, batch {b}: {exc}", epoch, b) from exc
            loss, dpred = mse_loss(pred, Y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}", epoch, b)
            grads = model.backward(cache, dpred)
            if config.gradient_clip is not None:
                grads = clip_by_global_norm(grads, config.gradient_clip)
            if adam is not None:
                _, new = adam_step(adam, model.theta, grads)
            else:
                new = sgd_step(model.theta, grads, lr)
            if not np.all(np.isfinite(new)):
                raise TrainingError(f"non-finite parameters after update at epoch {epoch}, batch {b}", epoch, b)
            model.theta[...] = new
            total += loss * len(idx)
        history.append(total / n)
    return model, history


def predict(model, dataset) -> np.ndarray:
    inputs = dataset.inputs if isinstance(dataset, EmbeddedDataset) else dataset
    return model.predict(inputs)
