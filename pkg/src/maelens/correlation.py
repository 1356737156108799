"""Data generators and second-moment matrices.

Includes the analytic Ising-ring correlation, a seeded Gibbs sampler for
the same model, Gaussian samples with a prescribed covariance, the raw
``X^T X`` correlation and the circular spatial autocorrelation of images.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .layout import Grid2D, PatchLayout, Ring1D
from .linalg import sym_factor, symmetrize
from .seeding import derive_rng

__all__ = [
    "DataMatrix",
    "IsingSpec",
    "ising_correlation",
    "ising_gibbs_sample",
    "gaussian_from_cov",
    "empirical_correlation",
    "spatial_autocorrelation",
    "autocorrelation_map",
    "radial_autocorrelation",
    "ring_neighbor_correlation",
]

GIBBS_CHAINS_PER_CHUNK = 64
GIBBS_SAMPLES_PER_CHAIN = 16
GAUSSIAN_ROWS_PER_CHUNK = 4096


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    layout: PatchLayout | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"data must be a non-empty 2-D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("data contains non-finite values")
        if self.layout is not None and self.layout.dim != v.shape[1]:
            raise DimensionError(f"layout has {self.layout.dim} dims but data has {v.shape[1]} columns")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class IsingSpec:
    d: int
    J: float

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"Ising ring needs d >= 3, got {self.d}")


def ising_correlation(spec: IsingSpec) -> np.ndarray:
    """Infinite-ring approximation ``<x_i x_j> = tanh(J)**r`` with ring distance r."""
    r = Ring1D(spec.d, 1).distance_matrix
    return np.tanh(spec.J) ** r


def ring_neighbor_correlation(d: int, J: float) -> float:
    """Exact nearest-neighbour correlation on a finite periodic ring of length d."""
    t = math.tanh(J)
    return (t + t ** (d - 1)) / (1 + t ** d)


def _gibbs_chunk(d, J, n_chains, n_per_chain, burn_in, thin, rng):
    x = rng.choice(np.array([-1.0, 1.0]), size=(n_chains, d))
    out = np.empty((n_per_chain, n_chains, d))

    def sweep():
        u = rng.random((d, n_chains))
        for i in range(d):
            field_ = x[:, i - 1] + x[:, (i + 1) % d]
            p_up = 1.0 / (1.0 + np.exp(-2.0 * J * field_))
            x[:, i] = np.where(u[i] < p_up, 1.0, -1.0)

    for _ in range(burn_in):
        sweep()
    for s in range(n_per_chain):
        if s:
            for _ in range(thin):
                sweep()
        out[s] = x
    # chain-major ordering
    return out.transpose(1, 0, 2).reshape(-1, d)


def ising_gibbs_sample(spec: IsingSpec, n: int, seed: int, burn_in: int = 100, thin: int = 10,
                       threads: int = 1) -> DataMatrix:
    """Draw n spin configurations from the periodic Ising ring.

    Samples come in fixed-size chunks of independent single-site Gibbs
    chains; chunk c is driven by a generator derived from ``(seed, c)``, so
    the output is identical for any ``threads``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    per_chunk = GIBBS_CHAINS_PER_CHUNK * GIBBS_SAMPLES_PER_CHAIN
    n_chunks = -(-n // per_chunk)

    def run(c):
        return _gibbs_chunk(spec.d, spec.J, GIBBS_CHAINS_PER_CHUNK, GIBBS_SAMPLES_PER_CHAIN,
                            burn_in, thin, derive_rng(seed, c))

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, range(n_chunks)))
    else:
        chunks = [run(c) for c in range(n_chunks)]
    X = np.concatenate(chunks)[:n]
    return DataMatrix(X, Ring1D(spec.d, 1))


def gaussian_from_cov(sigma, n: int, seed: int, threads: int = 1) -> DataMatrix:
    """Zero-mean Gaussian rows with covariance ``sigma``, drawn as ``Z @ G`` with ``G^T G = sigma``."""
    G = sym_factor(sigma)
    d = G.shape[0]
    n_chunks = -(-n // GAUSSIAN_ROWS_PER_CHUNK)

    def run(c):
        rows = min(GAUSSIAN_ROWS_PER_CHUNK, n - c * GAUSSIAN_ROWS_PER_CHUNK)
        return derive_rng(seed, c).standard_normal((rows, d)) @ G

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, range(n_chunks)))
    else:
        chunks = [run(c) for c in range(n_chunks)]
    return DataMatrix(np.concatenate(chunks))


def empirical_correlation(X, center: bool = False, normalize: bool = False) -> np.ndarray:
    """``X^T X``; optionally mean-centred and/or divided by n."""
    V = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if center:
        V = V - V.mean(axis=0)
    S = V.T @ V
    if normalize:
        S = S / V.shape[0]
    return symmetrize(S)


def spatial_autocorrelation(image, dx: int, dy: int) -> float:
    """``(1/MN) sum_x sum_y f(x, y) f(x+dx, y+dy)`` with wrap-around indexing."""
    f = np.asarray(image, dtype=float)
    M, N = f.shape
    if not (0 <= dx < M and 0 <= dy < N):
        raise ValueError(f"shift ({dx}, {dy}) out of range for a {M}x{N} image")
    shifted = np.roll(f, shift=(-dx, -dy), axis=(0, 1))
    return float((f * shifted).sum() / (M * N))


def autocorrelation_map(image) -> np.ndarray:
    """All circular autocorrelations at once via the power spectrum."""
    f = np.asarray(image, dtype=float)
    F = np.fft.fft2(f)
    return np.real(np.fft.ifft2(np.abs(F) ** 2)) / f.size


def radial_autocorrelation(images, pearson: bool = False):
    """Autocorrelation averaged over shifts at equal (circular) Euclidean distance.

    ``images`` is an array of shape (M, N) or (count, M, N). With
    ``pearson=True`` the per-image mean is removed and the result divided
    by the variance, so distance 0 maps to exactly 1. Returns
    ``(distances, values)``.
    """
    imgs = np.asarray(images, dtype=float)
    if imgs.ndim == 2:
        imgs = imgs[None]
    _, M, N = imgs.shape
    acc = np.zeros((M, N))
    for f in imgs:
        if pearson:
            f = f - f.mean()
            var = (f ** 2).mean()
            acc += autocorrelation_map(f) / var if var > 0 else 0.0
        else:
            acc += autocorrelation_map(f)
    acc /= len(imgs)
    ax = np.minimum(np.arange(M), M - np.arange(M))
    ay = np.minimum(np.arange(N), N - np.arange(N))
    r = np.round(np.hypot(ax[:, None], ay[None, :]), 9)
    dist = np.unique(r)
    vals = np.array([acc[r == v].mean() for v in dist])
    return dist, vals


def grid_layout_for(X: DataMatrix) -> Grid2D:
    if not isinstance(X.layout, Grid2D):
        raise ValueError("data matrix carries no Grid2D layout")
    return X.layout
