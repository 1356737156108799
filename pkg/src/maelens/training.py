"""Gradient-descent oracles for the linear and a small nonlinear MAE.

``train_linear`` runs full-batch gradient descent on the closed-form
masked loss. ``train_mlp`` trains a two-layer tanh encoder with a mirrored
decoder by stochastic gradient descent on freshly masked inputs, keeping
checkpoints at geometrically spaced steps for Jacobian analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, DivergenceError
from .masking import MaskSample, sample_mask_rows
from .seeding import derive_rng
from .solutions import LinearModel, marginal_loss, marginal_loss_grad

__all__ = [
    "TrainConfig",
    "MLPModel",
    "train_linear",
    "train_mlp",
    "mlp_loss_and_grads",
    "jacobian",
    "mlp_jacobian_analytic",
    "checkpoint_steps",
]

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_PATIENCE = 50


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    steps: int = 20000
    init_scale: float = 0.1
    seed: int = 0
    record_every: int = 10

    def __post_init__(self):
        if self.learning_rate <= 0 or self.init_scale <= 0:
            raise ValueError("learning_rate and init_scale must be positive")
        if self.steps < 1 or self.record_every < 1:
            raise ValueError("steps and record_every must be positive integers")


@dataclass
class MLPModel:
    """Two-layer tanh encoder with a mirrored decoder.

    ``z = tanh(x W1 + b1) W2 + b2`` (encoder) and
    ``y = tanh(z W3 + b3) W4 + b4`` (decoder).
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    W4: np.ndarray
    b4: np.ndarray
    layout: object = field(default=None, compare=False)

    @classmethod
    def init(cls, d, h, k, scale, rng, layout=None, zero_output=False):
        W4 = np.zeros((h, d)) if zero_output else scale * rng.standard_normal((h, d))
        return cls(
            W1=scale * rng.standard_normal((d, h)), b1=np.zeros(h),
            W2=scale * rng.standard_normal((h, k)), b2=np.zeros(k),
            W3=scale * rng.standard_normal((k, h)), b3=np.zeros(h),
            W4=W4, b4=np.zeros(d),
            layout=layout,
        )

    @property
    def d(self) -> int:
        return self.W1.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "MLPModel":
        return replace(self, **{k: v.copy() for k, v in self.params().items()})

    def encode(self, X):
        return np.tanh(X @ self.W1 + self.b1) @ self.W2 + self.b2

    def __call__(self, X):
        return np.tanh(self.encode(X) @ self.W3 + self.b3) @ self.W4 + self.b4


def mlp_loss_and_grads(model: MLPModel, X, Xin):
    """Mean over rows of ``||X - model(Xin)||^2`` and its gradients by backpropagation."""
    n = X.shape[0]
    a1 = np.tanh(Xin @ model.W1 + model.b1)
    z = a1 @ model.W2 + model.b2
    a3 = np.tanh(z @ model.W3 + model.b3)
    y = a3 @ model.W4 + model.b4
    E = X - y
    loss = float(np.sum(E * E) / n)

    dy = -2.0 * E / n
    g = {"W4": a3.T @ dy, "b4": dy.sum(0)}
    dh3 = (dy @ model.W4.T) * (1.0 - a3 * a3)
    g["W3"], g["b3"] = z.T @ dh3, dh3.sum(0)
    dz = dh3 @ model.W3.T
    g["W2"], g["b2"] = a1.T @ dz, dz.sum(0)
    dh1 = (dz @ model.W2.T) * (1.0 - a1 * a1)
    g["W1"], g["b1"] = Xin.T @ dh1, dh1.sum(0)
    return loss, g


class _DivergenceWatch:
    def __init__(self):
        self.initial = None
        self.bad = 0

    def update(self, loss, trace):
        if not math.isfinite(loss):
            raise DivergenceError(f"loss became non-finite ({loss})", trace)
        if self.initial is None:
            self.initial = loss
            return
        self.bad = self.bad + 1 if loss > DIVERGENCE_FACTOR * self.initial else 0
        if self.bad >= DIVERGENCE_PATIENCE:
            raise DivergenceError(
                f"loss exceeded {DIVERGENCE_FACTOR:g}x its initial value for {DIVERGENCE_PATIENCE} records",
                trace,
            )


def train_linear(sigma, m: float, layout, k: int, cfg: TrainConfig = TrainConfig()):
    """Full-batch gradient descent on the marginal masked loss.

    Returns ``(model, loss_trace)`` where ``loss_trace`` holds
    ``(step, loss)`` pairs every ``cfg.record_every`` steps plus the final
    step.
    """
    S = np.asarray(sigma, dtype=float)
    d = layout.dim
    if S.shape != (d, d):
        raise DimensionError(f"sigma {S.shape} does not match layout with {d} dims")
    rng = derive_rng(cfg.seed, 0)
    model = LinearModel(cfg.init_scale * rng.standard_normal((d, k)),
                        cfg.init_scale * rng.standard_normal((k, d)), m, layout)
    trace, watch = [], _DivergenceWatch()
    A, B = model.A, model.B
    for step in range(cfg.steps + 1):
        model = LinearModel(A, B, m, layout)
        if step % cfg.record_every == 0 or step == cfg.steps:
            loss = marginal_loss(S, model)
            trace.append((step, loss))
            watch.update(loss, trace)
        if step == cfg.steps:
            break
        gA, gB = marginal_loss_grad(S, model)
        A = A - cfg.learning_rate * gA
        B = B - cfg.learning_rate * gB
    return model, trace


def checkpoint_steps(steps: int) -> list[int]:
    """0, 1, 2, 4, ... up to ``steps``, always ending at ``steps``."""
    out, s = [0], 1
    while s < steps:
        out.append(s)
        s *= 2
    if out[-1] != steps:
        out.append(steps)
    return out


def train_mlp(X, m: float, layout, k: int, h: int, cfg: TrainConfig = TrainConfig(learning_rate=1e-3),
              batch_size: int | None = None, zero_output: bool = False, exact_fraction: bool = False):
    """Masked SGD for :class:`MLPModel`.

    Every step draws a fresh patch mask per sample from a generator keyed
    on ``(cfg.seed, step)``; with ``batch_size`` set, the minibatch rows are
    drawn from the same generator. Returns ``(model, loss_trace,
    checkpoints)`` with checkpoints as ``(step, model)`` pairs, where the
    model at step s has received s updates.
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    n, d = X.shape
    if d != layout.dim:
        raise DimensionError(f"data has {d} columns but layout has {layout.dim} dims")
    if h < k:
        raise ValueError(f"hidden width h={h} must be >= latent size k={k}")
    model = MLPModel.init(d, h, k, cfg.init_scale, derive_rng(cfg.seed, 0), layout, zero_output)
    ckpt_at = set(checkpoint_steps(cfg.steps))
    checkpoints, trace, watch = [], [], _DivergenceWatch()
    for step in range(cfg.steps + 1):
        if step in ckpt_at:
            checkpoints.append((step, model.copy()))
        if step == cfg.steps:
            break
        rng = derive_rng(cfg.seed, 1, step)
        Xb = X if batch_size is None or batch_size >= n else X[rng.choice(n, batch_size, replace=False)]
        R = sample_mask_rows(layout, m, Xb.shape[0], rng, exact_fraction)
        loss, grads = mlp_loss_and_grads(model, Xb, R * Xb)
        if step % cfg.record_every == 0:
            trace.append((step, loss))
            watch.update(loss, trace)
        for name, g in grads.items():
            setattr(model, name, getattr(model, name) - cfg.learning_rate * g)
    return model, trace, checkpoints


def _masked_input(x, mask):
    x = np.asarray(x, dtype=float).ravel()
    if mask is None:
        return x
    bits = mask.bits if isinstance(mask, MaskSample) else np.asarray(mask, dtype=float)
    if bits.shape != x.shape:
        raise DimensionError(f"mask has shape {bits.shape} but input has {x.shape}")
    return bits * x


def mlp_jacobian_analytic(model: MLPModel, x_masked) -> np.ndarray:
    """Closed-form ``d y_j / d x_i`` of the MLP at an (already masked) input."""
    x = np.asarray(x_masked, dtype=float).ravel()
    a1 = np.tanh(x @ model.W1 + model.b1)
    z = a1 @ model.W2 + model.b2
    a3 = np.tanh(z @ model.W3 + model.b3)
    return (model.W1 * (1 - a1 ** 2)) @ model.W2 @ (model.W3 * (1 - a3 ** 2)) @ model.W4


def jacobian(model, x, mask=None, step: float = 1e-4) -> np.ndarray:
    """Input-output Jacobian ``J[i, j] = d output_j / d input_i`` at ``mask * x``.

    Exact ``A @ B`` for a :class:`LinearModel`; central finite differences
    with the given step for an :class:`MLPModel`.
    """
    if isinstance(model, LinearModel):
        return model.projection.copy()
    xt = _masked_input(x, mask)
    d = xt.size
    E = step * np.eye(d)
    Y = model(np.concatenate([xt + E, xt - E]))
    return (Y[:d] - Y[d:]) / (2 * step)
