"""Frequency-domain view of patch masks.

A 1-D mask made of length-p rectangular pulses starting at ``a_1..a_N``
(placed cyclically on a length-D signal) has DFT magnitude::

    |M[k]| = |sin(pi p k / D) / sin(pi k / D)| * |sum_i exp(-2j pi k a_i / D)|

The Dirichlet factor is the pulse itself; the sum of phases produces the
grating pattern for evenly spaced pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SpectrumTable", "dft", "rect_magnitude", "pulse_mask", "mask_spectrum", "fft_spectrum"]


@dataclass(frozen=True)
class SpectrumTable:
    D: int
    k_index: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray | None = None
    overlap: bool = False

    def rows(self):
        return zip(self.k_index.tolist(), self.magnitude.tolist())


def dft(signal) -> np.ndarray:
    """Unnormalised forward DFT ``X[k] = sum_n x[n] exp(-2j pi k n / D)``, evaluated directly."""
    x = np.asarray(signal, dtype=complex).ravel()
    D = x.size
    if D < 1:
        raise ValueError("signal must have at least one sample")
    n = np.arange(D)
    # reduce k*n mod D before scaling so the phases stay exact for large D
    return np.exp(-2j * np.pi * (np.outer(n, n) % D) / D) @ x


def rect_magnitude(p: int, D: int, k: int) -> float:
    """``|sin(pi p k / D) / sin(pi k / D)|``, equal to p where the denominator vanishes."""
    if not 1 <= p <= D:
        raise ValueError(f"pulse length p={p} must be in [1, D={D}]")
    if k % D == 0:
        return float(p)
    return abs(math.sin(math.pi * p * k / D) / math.sin(math.pi * k / D))


def pulse_mask(starts, p: int, D: int) -> np.ndarray:
    """Sum of cyclic rectangular pulses ``r[n - a_i]``; overlapping pulses add."""
    m = np.zeros(D)
    for a in starts:
        m[(int(a) + np.arange(p)) % D] += 1.0
    return m


def mask_spectrum(starts, p: int, D: int) -> SpectrumTable:
    """Closed-form magnitude spectrum of :func:`pulse_mask`.

    Exact for any starts because pulses are placed cyclically; overlap is
    flagged (the closed form then describes the summed, not the binary,
    mask).
    """
    starts = [int(a) % D for a in starts]
    k = np.arange(D)
    phases = np.exp(-2j * np.pi * (np.outer(k, starts) % D) / D).sum(axis=1) if starts else np.zeros(D, complex)
    M = _rect_dft(p, D) * phases
    covered = pulse_mask(starts, p, D)
    return SpectrumTable(D=D, k_index=k, magnitude=np.abs(M), phase=np.angle(M),
                         overlap=bool(np.any(covered > 1)))


def _rect_dft(p, D):
    """Complex DFT of a single pulse at the origin: linear phase times the signed Dirichlet ratio."""
    k = np.arange(D)
    ratio = np.full(D, float(p))
    nz = k % D != 0
    ratio[nz] = np.sin(np.pi * p * k[nz] / D) / np.sin(np.pi * k[nz] / D)
    return np.exp(-1j * np.pi * k * (p - 1) / D) * ratio


def fft_spectrum(mask) -> SpectrumTable:
    """Magnitude of ``numpy.fft.fft`` of an explicit mask."""
    mask = np.asarray(mask, dtype=float)
    F = np.fft.fft(mask)
    return SpectrumTable(D=mask.size, k_index=np.arange(mask.size), magnitude=np.abs(F), phase=np.angle(F))
