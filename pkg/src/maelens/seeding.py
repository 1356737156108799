"""Deterministic seed derivation.

Every parallelisable loop (Monte-Carlo trials, sampler chunks, training
steps) draws from a generator keyed on ``(seed, index)`` so that results do
not depend on how work is split across threads.
"""

import numpy as np


def derive_rng(seed: int, *index: int) -> np.random.Generator:
    """Generator for the stream identified by ``seed`` and ``index``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(i) for i in index]])
    return np.random.Generator(np.random.PCG64(ss))
