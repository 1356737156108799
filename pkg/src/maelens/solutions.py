"""Closed-form linear masked, plain and denoising autoencoders.

Everything is expressed through the second-moment matrix ``sigma = X^T X``
so that analytic surrogates (e.g. the Ising correlation) can be used in
place of data. For a masking ratio ``m`` with Bernoulli patch masks the
expected loss is::

    tr(S) - 2(1-m) tr(S W) + (1-m)^2 tr(W^T S W) + m(1-m) tr(W^T blk(S) W)

with ``W = A @ B``. Setting the encoder gradient to zero gives
``A = V^-1 S B^T (B B^T)^-1`` with ``V = (1-m) S + m blk(S)``; the decoder
rows then span eigenvectors of ``S V^-1 S``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularSystemError
from .layout import PatchLayout, Ring1D
from .linalg import blkdiag, gen_sym_eig, symmetrize

__all__ = [
    "LinearModel",
    "MAESolution",
    "marginal_loss",
    "marginal_loss_grad",
    "dae_loss",
    "dae_loss_grad",
    "mae_optimum",
    "ae_optimum",
    "dae_optimum",
    "critical_point",
    "critical_points",
    "V_COND_LIMIT",
    "V_RIDGE",
]

V_COND_LIMIT = 1e12
V_RIDGE = 1e-10


@dataclass(frozen=True)
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    m: float
    layout: PatchLayout

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0] or A.shape[0] != B.shape[1]:
            raise DimensionError(f"encoder {A.shape} and decoder {B.shape} do not compose to d x d")
        if not 1 <= A.shape[1] <= A.shape[0]:
            raise DimensionError(f"latent size k={A.shape[1]} must be in [1, d={A.shape[0]}]")
        if A.shape[0] != self.layout.dim:
            raise DimensionError(f"model has d={A.shape[0]} but layout has {self.layout.dim} dims")
        if not 0.0 <= self.m <= 1.0:
            raise ValueError(f"masking ratio must be in [0, 1], got {self.m}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    @property
    def projection(self) -> np.ndarray:
        return self.A @ self.B


@dataclass(frozen=True)
class MAESolution:
    model: LinearModel
    loss: float
    eigvalues: np.ndarray
    kind: str = "mae"
    noise_var: float = 0.0

    @property
    def projection(self) -> np.ndarray:
        return self.model.projection


def _check_sigma(sigma, d=None) -> np.ndarray:
    S = np.asarray(sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"sigma must be square, got shape {S.shape}")
    if d is not None and S.shape[0] != d:
        raise DimensionError(f"sigma is {S.shape[0]}x{S.shape[0]} but the model has d={d}")
    return symmetrize(S)


def marginal_loss(sigma, model: LinearModel) -> float:
    """Expected masked reconstruction loss over Bernoulli patch masks."""
    S = _check_sigma(sigma, model.d)
    m = model.m
    W = model.projection
    SW = S @ W
    loss = np.trace(S) - 2 * (1 - m) * np.trace(SW) + (1 - m) ** 2 * np.sum(W * SW)
    if 0 < m < 1:
        loss += m * (1 - m) * np.sum(W * (blkdiag(S, model.layout) @ W))
    return float(loss)


def marginal_loss_grad(sigma, model: LinearModel) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients ``(dL/dA, dL/dB)`` of :func:`marginal_loss`."""
    S = _check_sigma(sigma, model.d)
    m = model.m
    W = model.projection
    GW = -2 * (1 - m) * S + 2 * (1 - m) ** 2 * (S @ W)
    if 0 < m < 1:
        GW += 2 * m * (1 - m) * (blkdiag(S, model.layout) @ W)
    return GW @ model.B.T, model.A.T @ GW


def dae_loss(sigma, A, B, noise_var: float, n: int) -> float:
    """Expected denoising loss ``||X - X A B||^2 + n s2 ||A B||_F^2`` under Gaussian input noise."""
    S = _check_sigma(sigma)
    W = np.asarray(A) @ np.asarray(B)
    return float(np.trace(S) - 2 * np.trace(S @ W) + np.sum(W * (S @ W)) + n * noise_var * np.sum(W * W))


def dae_loss_grad(sigma, A, B, noise_var: float, n: int):
    S = _check_sigma(sigma)
    A, B = np.asarray(A), np.asarray(B)
    W = A @ B
    GW = -2 * S + 2 * (S @ W) + 2 * n * noise_var * W
    return GW @ B.T, A.T @ GW


def _whitening_matrix(S, m, layout) -> np.ndarray:
    V = (1 - m) * S + (m * blkdiag(S, layout) if m > 0 else 0.0)
    return symmetrize(V)


def _condition_or_regularize(V) -> np.ndarray:
    d = V.shape[0]
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > V_COND_LIMIT:
        eps = V_RIDGE * np.trace(V) / d
        warnings.warn(
            f"V is ill-conditioned (cond={cond:.3e}); adding ridge {eps:.3e} * I",
            RuntimeWarning,
            stacklevel=3,
        )
        V = V + eps * np.eye(d)
        cond = np.linalg.cond(V)
        if eps <= 0 or not np.isfinite(cond) or cond > 1e16:
            raise SingularSystemError(f"V is numerically singular even after regularization (cond={cond:.3e})")
    return V


def _solve_from_whitening(S, V, k):
    """Eigenpairs of ``S V^-1 S`` and the matrix ``V^-1 S`` used to build encoders."""
    d = S.shape[0]
    if not 1 <= k <= d:
        raise DimensionError(f"latent size k={k} must be in [1, d={d}]")
    V = _condition_or_regularize(V)
    VinvS = np.linalg.solve(V, S)
    C = symmetrize(S @ VinvS)
    return gen_sym_eig(C), VinvS


def _model_from_vectors(VinvS, U, m, layout) -> LinearModel:
    # canonical gauge: B = U^T with orthonormal rows, so (B B^T)^-1 = I
    B = U.T.copy()
    A = VinvS @ U
    return LinearModel(A=A, B=B, m=m, layout=layout)


def mae_optimum(sigma, m: float, layout: PatchLayout, k: int) -> MAESolution:
    """Global minimiser of :func:`marginal_loss` in the gauge ``B = U_k^T``."""
    S = _check_sigma(sigma, layout.dim)
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"masking ratio must be in [0, 1], got {m}")
    eig, VinvS = _solve_from_whitening(S, _whitening_matrix(S, m, layout), k)
    lam, U = eig.top(k)
    model = _model_from_vectors(VinvS, U, m, layout)
    return MAESolution(model=model, loss=marginal_loss(S, model), eigvalues=lam.copy())


def ae_optimum(sigma, k: int, layout: PatchLayout | None = None) -> MAESolution:
    """Plain autoencoder (PCA) optimum; the m = 0 case of :func:`mae_optimum`."""
    S = _check_sigma(sigma)
    layout = Ring1D(S.shape[0], 1) if layout is None else layout
    sol = mae_optimum(S, 0.0, layout, k)
    return MAESolution(model=sol.model, loss=sol.loss, eigvalues=sol.eigvalues, kind="ae")


def dae_optimum(sigma, noise_var: float, n: int, k: int, layout: PatchLayout | None = None) -> MAESolution:
    """Linear denoising autoencoder optimum.

    Gaussian input noise of variance ``noise_var`` on n samples acts as an
    ``n * noise_var * ||AB||_F^2`` penalty, which replaces V by
    ``S + n * noise_var * I`` in the same eigenproblem. The ``loss`` field is
    the expected denoising loss (see :func:`dae_loss`).
    """
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    S = _check_sigma(sigma)
    d = S.shape[0]
    layout = Ring1D(d, 1) if layout is None else layout
    V = S + n * noise_var * np.eye(d)
    eig, VinvS = _solve_from_whitening(S, V, k)
    lam, U = eig.top(k)
    model = _model_from_vectors(VinvS, U, 0.0, layout)
    loss = dae_loss(S, model.A, model.B, noise_var, n)
    return MAESolution(model=model, loss=loss, eigvalues=lam.copy(), kind="dae", noise_var=noise_var)


def critical_point(sigma, m: float, layout: PatchLayout, subset) -> tuple[LinearModel, float]:
    """Critical point built from the eigenvectors at positions ``subset``.

    Indices refer to the descending eigenvalue order of ``S V^-1 S``.
    Returns the model and its marginal loss.
    """
    S = _check_sigma(sigma, layout.dim)
    idx = [int(i) for i in subset]
    d = S.shape[0]
    if len(set(idx)) != len(idx) or not idx or any(not 0 <= i < d for i in idx):
        raise ValueError(f"invalid eigen-index subset {subset!r} for d={d}")
    eig, VinvS = _solve_from_whitening(S, _whitening_matrix(S, m, layout), len(idx))
    model = _model_from_vectors(VinvS, eig.vectors[:, idx], m, layout)
    return model, marginal_loss(S, model)


def critical_points(sigma, m: float, layout: PatchLayout, k: int):
    """Every k-subset critical point as ``(subset, model, loss)``, subsets in lexicographic order."""
    S = _check_sigma(sigma, layout.dim)
    eig, VinvS = _solve_from_whitening(S, _whitening_matrix(S, m, layout), k)
    out = []
    for subset in itertools.combinations(range(S.shape[0]), k):
        model = _model_from_vectors(VinvS, eig.vectors[:, list(subset)], m, layout)
        out.append((subset, model, marginal_loss(S, model)))
    return out


def generalized_eigvalues(sigma, m: float, layout: PatchLayout) -> np.ndarray:
    """Full descending spectrum of ``S V^-1 S``."""
    S = _check_sigma(sigma, layout.dim)
    eig, _ = _solve_from_whitening(S, _whitening_matrix(S, m, layout), 1)
    return eig.values
