"""Measurements on reconstruction kernels.

Conventions: ``J[i, j]`` is the influence of input i on output j (for a
linear model ``J = A @ B``). Logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError
from .layout import Ring1D

__all__ = [
    "KernelProfile",
    "EntropyHistogram",
    "BoundaryEmphasis",
    "normalized_weights",
    "kernel_profile",
    "spatial_entropy",
    "column_entropies",
    "entropy_histogram",
    "boundary_emphasis",
    "BOUNDARY_CAP",
]

LOG_FLOOR = 1e-12
BOUNDARY_CAP = 1e12


@dataclass(frozen=True)
class KernelProfile:
    distances: np.ndarray
    mean_abs: np.ndarray
    fit_amplitude: float
    fit_decay: float
    fit_r2: float
    concentrated: bool = False

    def to_dict(self) -> dict:
        return {
            "distances": self.distances.tolist(),
            "mean_abs": self.mean_abs.tolist(),
            "fit_amplitude": self.fit_amplitude,
            "fit_decay": _json_float(self.fit_decay),
            "fit_r2": self.fit_r2,
            "concentrated": self.concentrated,
        }


@dataclass(frozen=True)
class EntropyHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    entropies: np.ndarray

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "entropies": self.entropies.tolist(),
            "mean_entropy": float(self.entropies.mean()) if self.entropies.size else None,
        }


class BoundaryEmphasis(NamedTuple):
    ratio: float
    capped: bool


def _json_float(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def normalized_weights(J) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise L1-normalised ``|J|`` and a mask of the columns that were non-zero."""
    J = np.abs(np.asarray(J, dtype=float))
    if J.ndim != 2:
        raise DimensionError("Jacobian must be a 2-D matrix")
    col = J.sum(axis=0)
    keep = col > 0
    W = np.zeros_like(J)
    W[:, keep] = J[:, keep] / col[keep]
    return W, keep


def kernel_profile(J, layout, metric=None) -> KernelProfile:
    """Mean normalised ``|J|`` per input-output distance, with an exponential fit.

    Each output column is normalised to unit L1 mass first, then weights are
    averaged over all (input, output) pairs at the same distance. The fit is
    ordinary least squares of ``log(mean_abs + 1e-12)`` on distance, giving
    ``a * exp(-r / decay)``. When every bit of mass sits at distance 0 the
    decay is reported as 0 with ``concentrated=True``. A non-negative slope
    gives ``decay = inf``.

    ``metric`` is an optional (d, d) distance matrix; by default the layout's
    own metric (circular on rings, Euclidean on grids) is used.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian has non-finite entries")
    dist = layout.distance_matrix if metric is None else np.asarray(metric, dtype=float)
    if J.shape != dist.shape:
        raise DimensionError(f"Jacobian {J.shape} does not match layout with {dist.shape[0]} dims")
    W, keep = normalized_weights(J)
    if not keep.any():
        raise ValueError("every Jacobian column is zero")
    W, D = W[:, keep], np.round(dist[:, keep], 9)
    distances = np.unique(D)
    mean_abs = np.array([W[D == r].mean() for r in distances])

    concentrated = bool(np.all(mean_abs[distances > 0] == 0))
    if concentrated or distances.size < 2:
        return KernelProfile(distances, mean_abs, float(mean_abs[0]), 0.0, 1.0, True)

    y = np.log(mean_abs + LOG_FLOOR)
    slope, intercept = np.polyfit(distances, y, 1)
    resid = y - (slope * distances + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    decay = -1.0 / slope if slope < 0 else math.inf
    return KernelProfile(distances, mean_abs, float(np.exp(intercept)), float(decay), float(r2))


def spatial_entropy(column) -> float:
    """Shannon entropy of the L1-normalised absolute values; ``0 log 0 = 0``."""
    a = np.abs(np.asarray(column, dtype=float)).ravel()
    total = a.sum()
    if total == 0:
        raise ValueError("spatial entropy is undefined for an all-zero vector")
    q = a / total
    q = q[q > 0]  # tiny entries can underflow to 0 after scaling
    s = float(-(q * np.log(q)).sum())
    if s <= 0.0:
        return 0.0
    return min(s, math.log(a.size))


def column_entropies(J) -> np.ndarray:
    """Entropy of each non-zero output column of J."""
    J = np.asarray(J, dtype=float)
    return np.array([spatial_entropy(J[:, j]) for j in range(J.shape[1]) if np.any(J[:, j])])


def entropy_histogram(J, bins: int = 20) -> EntropyHistogram:
    if bins < 1:
        raise ValueError("bins must be >= 1")
    J = np.asarray(J, dtype=float)
    S = column_entropies(J)
    counts, edges = np.histogram(S, bins=bins, range=(0.0, math.log(J.shape[0])))
    return EntropyHistogram(edges, counts, S)


def boundary_emphasis(A, layout: Ring1D, width: int = 1) -> BoundaryEmphasis:
    """Mean encoder row norm on patch-boundary dims over that on interior dims."""
    if not isinstance(layout, Ring1D):
        raise NotImplementedError("boundary emphasis is defined for Ring1D layouts only")
    A = np.asarray(A, dtype=float)
    if A.shape[0] != layout.d:
        raise DimensionError(f"encoder has {A.shape[0]} rows but layout has d={layout.d}")
    boundary = layout.boundary_dims(width)
    interior = sorted(set(range(layout.d)) - set(boundary))
    if not boundary or not interior:
        raise ValueError(f"patch size {layout.p} leaves no interior (or no boundary) dims at width {width}")
    norms = np.linalg.norm(A, axis=1)
    b, i = norms[boundary].mean(), norms[interior].mean()
    if i == 0:
        return BoundaryEmphasis(BOUNDARY_CAP if b > 0 else 1.0, b > 0)
    return BoundaryEmphasis(float(min(b / i, BOUNDARY_CAP)), b / i >= BOUNDARY_CAP)
