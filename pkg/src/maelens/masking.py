"""Bernoulli patch masks and the Monte-Carlo estimate of the masked loss.

Convention: a mask multiplies the input, so bit 1 means *visible* and bit 0
means *masked*. Each patch is masked independently with probability m.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .seeding import derive_rng

__all__ = ["MaskSample", "sample_mask", "sample_mask_rows", "mc_loss", "mask_moment_check", "MomentReport"]


@dataclass(frozen=True)
class MaskSample:
    bits: np.ndarray
    layout: object
    m: float


def sample_mask_rows(layout, m: float, n: int, rng: np.random.Generator, exact_fraction: bool = False) -> np.ndarray:
    """n independent masks as an (n, d) 0/1 float array.

    ``exact_fraction=True`` instead masks exactly ``round(m * n_patches)``
    patches per row, the convention of production MAEs. The closed-form
    loss does not apply to that variant.
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"masking ratio must be in [0, 1], got {m}")
    P = layout.n_patches
    if exact_fraction:
        n_masked = int(round(m * P))
        keys = rng.random((n, P))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        visible = ranks >= n_masked
    else:
        visible = rng.random((n, P)) >= m
    return visible[:, layout.patch_ids].astype(float)


def sample_mask(layout, m: float, seed: int, exact_fraction: bool = False) -> MaskSample:
    bits = sample_mask_rows(layout, m, 1, derive_rng(seed), exact_fraction)[0]
    return MaskSample(bits=bits, layout=layout, m=m)


def _trial_loss(X, W, layout, m, seed, t):
    R = sample_mask_rows(layout, m, X.shape[0], derive_rng(seed, t))
    E = X - (R * X) @ W
    return float(np.sum(E * E))


def mc_loss(X, model, trials: int, seed: int, threads: int = 1) -> tuple[float, float]:
    """Monte-Carlo estimate of ``E_R ||X - (R * X) A B||^2``.

    Each trial draws a fresh mask for every sample row from a generator
    keyed on ``(seed, trial)``. Returns the mean over trials and its
    standard error; both are independent of ``threads``.
    """
    if trials < 2:
        raise ValueError("mc_loss needs at least 2 trials to estimate a standard error")
    X = np.asarray(getattr(X, "values", X), dtype=float)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise DimensionError(f"data has shape {X.shape} but the model has d={model.d}")
    W = model.projection
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            losses = np.fromiter(
                pool.map(lambda t: _trial_loss(X, W, model.layout, model.m, seed, t), range(trials)),
                dtype=float, count=trials,
            )
    else:
        losses = np.fromiter(
            (_trial_loss(X, W, model.layout, model.m, seed, t) for t in range(trials)),
            dtype=float, count=trials,
        )
    # np.sum over a contiguous array is a fixed-order pairwise reduction
    mean = float(np.sum(losses) / trials)
    stderr = float(np.std(losses, ddof=1) / np.sqrt(trials))
    return mean, stderr


@dataclass(frozen=True)
class MomentReport:
    first_moment: np.ndarray
    second_moment: np.ndarray
    max_first_dev: float
    max_same_patch_dev: float
    max_cross_patch_dev: float

    def to_dict(self) -> dict:
        return {
            "max_first_dev": self.max_first_dev,
            "max_same_patch_dev": self.max_same_patch_dev,
            "max_cross_patch_dev": self.max_cross_patch_dev,
        }


def mask_moment_check(layout, m: float, trials: int, seed: int) -> MomentReport:
    """Empirical ``E[R_i]`` and ``E[R_i R_j]`` against ``1-m`` and ``(1-m)`` / ``(1-m)^2``."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials for a meaningful moment check")
    R = sample_mask_rows(layout, m, trials, derive_rng(seed))
    first = R.mean(axis=0)
    second = (R.T @ R) / trials
    ids = layout.patch_ids
    same = ids[:, None] == ids[None, :]
    q = 1.0 - m
    cross_dev = float(np.max(np.abs(second[~same] - q * q))) if (~same).any() else 0.0
    return MomentReport(
        first_moment=first,
        second_moment=second,
        max_first_dev=float(np.max(np.abs(first - q))),
        max_same_patch_dev=float(np.max(np.abs(second[same] - q))),
        max_cross_patch_dev=cross_dev,
    )
