"""Gabor-feature prediction as a downstream probe of linear MAE encoders.

Targets are Gabor-filtered copies of each image; a ridge regressor is fit
from the encoder's latent codes ``x @ A`` to those targets. Sweeping the
masking ratio against the Gabor scale shows which encoders keep the
longer-range information large-scale filters need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .correlation import DataMatrix, empirical_correlation
from .errors import SingularSystemError
from .layout import Grid2D
from .seeding import derive_rng
from .solutions import mae_optimum

__all__ = ["GaborSpec", "TaskResult", "gabor_kernel", "gabor_target", "ridge_readout", "gabor_sweep",
           "correlated_images"]

TASK_COLUMNS = ("m", "p", "sigma", "f", "train_mse", "test_mse")


@dataclass(frozen=True)
class GaborSpec:
    frequency: float
    sigma: float
    phase: float = 0.0
    gamma: float = 1.0
    radius: int | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("Gabor scale sigma must be positive")
        if self.radius is None:
            object.__setattr__(self, "radius", max(1, math.ceil(4 * self.sigma)))
        if self.radius < 1:
            raise ValueError("truncation radius must be >= 1")


@dataclass
class TaskResult:
    rows: list = field(default_factory=list)

    def add(self, **row):
        self.rows.append({c: row[c] for c in TASK_COLUMNS})

    def lookup(self, **key):
        return [r for r in self.rows if all(r[k] == v for k, v in key.items())]


def gabor_kernel(spec: GaborSpec) -> np.ndarray:
    """Kernel ``g[i + rho, j + rho]`` for integer offsets ``i, j`` in ``[-rho, rho]``."""
    r = spec.radius
    i = np.arange(-r, r + 1, dtype=float)[:, None]
    j = np.arange(-r, r + 1, dtype=float)[None, :]
    env = np.exp(-(i ** 2 + spec.gamma ** 2 * j ** 2) / (2 * spec.sigma ** 2))
    return env * np.cos(2 * np.pi * i * spec.frequency + spec.phase)


def _images(X: DataMatrix) -> np.ndarray:
    lay = X.layout
    if not isinstance(lay, Grid2D):
        raise ValueError("Gabor targets need a data matrix with a Grid2D layout")
    return X.values.reshape(X.n, lay.height, lay.width, lay.channels).mean(axis=3)


def gabor_target(X: DataMatrix, spec: GaborSpec) -> DataMatrix:
    """Zero-padded 'same'-size convolution of each (channel-averaged) image with the kernel."""
    g = gabor_kernel(spec)
    imgs = _images(X)
    out = np.stack([convolve2d(im, g, mode="same", boundary="fill") for im in imgs])
    lay = X.layout
    return DataMatrix(out.reshape(X.n, -1), Grid2D(lay.height, lay.width, 1, lay.p))


def ridge_readout(latents, targets, ridge: float, seed: int, train_fraction: float = 0.8):
    """Closed-form ridge probe on a seeded 80/20 split.

    Returns ``(weights, train_mse, test_mse)``; MSE is averaged over all
    target entries. There is no intercept.
    """
    Z = np.asarray(latents, dtype=float)
    T = np.asarray(targets, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    n = Z.shape[0]
    if n < 4 or T.shape[0] != n:
        raise ValueError("need at least 4 samples and matching latent/target rows")
    if ridge < 0:
        raise ValueError("ridge penalty must be non-negative")
    perm = derive_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    tr, te = perm[:n_train], perm[n_train:]
    G = Z[tr].T @ Z[tr] + ridge * np.eye(Z.shape[1])
    if ridge == 0 and np.linalg.matrix_rank(G) < G.shape[0]:
        raise SingularSystemError("latent Gram matrix is singular at ridge=0; use a positive ridge")
    W = np.linalg.solve(G, Z[tr].T @ T[tr])
    train_mse = float(np.mean((Z[tr] @ W - T[tr]) ** 2))
    test_mse = float(np.mean((Z[te] @ W - T[te]) ** 2))
    return W, train_mse, test_mse


def gabor_sweep(X: DataMatrix, sigmas, freqs, ms, p: int, k: int, ridge: float, seeds=(0,)) -> TaskResult:
    """MAE encoder per masking ratio, ridge probe per Gabor target.

    The encoder comes from the closed form on the raw ``X^T X`` of the
    images, with square patches of side p. MSEs are averaged over the split
    seeds.
    """
    if not (len(sigmas) and len(freqs) and len(ms) and len(seeds)):
        raise ValueError("sigma, frequency, masking-ratio and seed lists must be non-empty")
    lay = X.layout
    if not isinstance(lay, Grid2D):
        raise ValueError("gabor_sweep needs a data matrix with a Grid2D layout")
    layout = Grid2D(lay.height, lay.width, lay.channels, p)
    S = empirical_correlation(X)
    targets = {(s, f): gabor_target(X, GaborSpec(frequency=f, sigma=s)).values for s in sigmas for f in freqs}
    result = TaskResult()
    for m in ms:
        A = mae_optimum(S, m, layout, k).model.A
        Z = X.values @ A
        for s in sigmas:
            for f in freqs:
                fits = [ridge_readout(Z, targets[s, f], ridge, seed)[1:] for seed in seeds]
                tr, te = np.mean(fits, axis=0)
                result.add(m=m, p=p, sigma=s, f=f, train_mse=float(tr), test_mse=float(te))
    return result


def correlated_images(n: int, height: int, width: int, length_scale: float, seed: int,
                      p: int = 1) -> DataMatrix:
    """Stationary Gaussian images with covariance ``exp(-r^2 / (2 l^2))`` (plus a small nugget).

    Synthetic stand-in for natural images in the Gabor sweep.
    """
    from .correlation import gaussian_from_cov

    lay = Grid2D(height, width, 1, p)
    r2 = lay.distance_matrix ** 2
    cov = np.exp(-r2 / (2 * length_scale ** 2)) + 1e-6 * np.eye(lay.dim)
    X = gaussian_from_cov(cov, n, seed)
    return DataMatrix(X.values, lay)
