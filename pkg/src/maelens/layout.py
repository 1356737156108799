"""Patch layouts and spatial distances between input dimensions.

Two layouts are supported:

* :class:`Ring1D` -- ``d`` dimensions on a ring, grouped into runs of ``p``.
  Distances are circular, ``min(|i - j|, d - |i - j|)``.
* :class:`Grid2D` -- ``H x W`` pixels with ``c`` channels, flattened
  pixel-major (index ``(row * W + col) * c + channel``) and grouped into
  square ``p x p`` tiles. Distances are Euclidean between pixel centres and
  ignore the channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError

__all__ = ["Ring1D", "Grid2D", "PatchLayout", "patch_of", "distance", "boundary_dims"]


@dataclass(frozen=True)
class Ring1D:
    d: int
    p: int

    def __post_init__(self):
        if self.d < 1 or self.p < 1:
            raise DimensionError(f"d and p must be positive, got d={self.d}, p={self.p}")
        if self.d % self.p:
            raise DimensionError(f"patch size {self.p} does not divide d={self.d}")

    kind = "ring"

    @property
    def dim(self) -> int:
        return self.d

    @property
    def n_patches(self) -> int:
        return self.d // self.p

    @cached_property
    def patch_ids(self) -> np.ndarray:
        return np.arange(self.d) // self.p

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        idx = np.arange(self.d)
        gap = np.abs(idx[:, None] - idx[None, :])
        return np.minimum(gap, self.d - gap).astype(float)

    def _check(self, i):
        if not 0 <= i < self.d:
            raise IndexError(f"dimension index {i} out of range for d={self.d}")

    def patch_of(self, i: int) -> int:
        self._check(i)
        return i // self.p

    def distance(self, i: int, j: int) -> float:
        self._check(i)
        self._check(j)
        gap = abs(i - j)
        return float(min(gap, self.d - gap))

    def boundary_dims(self, width: int = 1) -> list[int]:
        """Dims within ``width`` (ring distance) of a dim in another patch."""
        if self.n_patches == 1:
            return []
        offset = np.arange(self.d) % self.p
        # distance to the nearest foreign dim: before the patch start or after its end
        to_edge = np.minimum(offset + 1, self.p - offset)
        return [int(i) for i in np.flatnonzero(to_edge <= width)]

    def to_dict(self) -> dict:
        return {"kind": "ring", "d": self.d, "p": self.p}


@dataclass(frozen=True)
class Grid2D:
    height: int
    width: int
    channels: int
    p: int

    def __post_init__(self):
        if min(self.height, self.width, self.channels, self.p) < 1:
            raise DimensionError("grid sizes and patch side must be positive")
        if self.height % self.p or self.width % self.p:
            raise DimensionError(
                f"patch side {self.p} must divide both height={self.height} and width={self.width}"
            )

    kind = "grid"

    @property
    def dim(self) -> int:
        return self.height * self.width * self.channels

    @property
    def n_patches(self) -> int:
        return (self.height // self.p) * (self.width // self.p)

    @cached_property
    def pixel_coords(self) -> np.ndarray:
        """(dim, 2) array of (row, col) for every input dimension."""
        pix = np.arange(self.dim) // self.channels
        return np.stack([pix // self.width, pix % self.width], axis=1)

    @cached_property
    def patch_ids(self) -> np.ndarray:
        rc = self.pixel_coords // self.p
        return rc[:, 0] * (self.width // self.p) + rc[:, 1]

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        rc = self.pixel_coords.astype(float)
        diff = rc[:, None, :] - rc[None, :, :]
        return np.sqrt((diff ** 2).sum(-1))

    def _check(self, i):
        if not 0 <= i < self.dim:
            raise IndexError(f"dimension index {i} out of range for dim={self.dim}")

    def dim_index(self, row: int, col: int, channel: int = 0) -> int:
        return (row * self.width + col) * self.channels + channel

    def patch_of(self, i: int) -> int:
        self._check(i)
        return int(self.patch_ids[i])

    def distance(self, i: int, j: int) -> float:
        self._check(i)
        self._check(j)
        a, b = self.pixel_coords[i], self.pixel_coords[j]
        return float(np.hypot(*(a - b)))

    def boundary_dims(self, width: int = 1):
        raise NotImplementedError("boundary dims are only defined for Ring1D layouts")

    def to_dict(self) -> dict:
        return {"kind": "grid", "height": self.height, "width": self.width,
                "channels": self.channels, "p": self.p}


PatchLayout = Ring1D | Grid2D


def layout_from_dict(spec: dict) -> PatchLayout:
    if spec["kind"] == "ring":
        return Ring1D(int(spec["d"]), int(spec["p"]))
    if spec["kind"] == "grid":
        return Grid2D(int(spec["height"]), int(spec["width"]), int(spec["channels"]), int(spec["p"]))
    raise ValueError(f"unknown layout kind {spec['kind']!r}")


def patch_of(layout: PatchLayout, i: int) -> int:
    return layout.patch_of(i)


def distance(layout: PatchLayout, i: int, j: int) -> float:
    return layout.distance(i, j)


def boundary_dims(layout: PatchLayout, width: int = 1) -> list[int]:
    if not isinstance(layout, Ring1D):
        raise NotImplementedError("boundary dims are only defined for Ring1D layouts")
    return layout.boundary_dims(width)
