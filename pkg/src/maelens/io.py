"""File formats: headerless matrix CSV, table CSV and JSON run manifests.

Matrices are written one row per line, comma separated, every float with
17 significant digits, UTF-8, LF line endings, no header. Tables (kernel
profiles, task results, spectra) carry a single header line.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["write_matrix", "read_matrix", "write_table", "read_table", "write_json", "RunManifest"]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_matrix(path, M) -> Path:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in M:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_matrix(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"{path} holds no matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path} has ragged rows")
    return np.array(rows, dtype=float)


def write_table(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")
    return path


def read_table(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class RunManifest:
    """Record of one CLI invocation, written next to its outputs."""

    def __init__(self, command: str, params: dict, seeds=None):
        self.command = command
        self.params = params
        self.seeds = {} if seeds is None else dict(seeds)
        self.outputs: list[str] = []
        self._t0 = time.perf_counter()

    def add(self, path) -> Path:
        self.outputs.append(os.fspath(path))
        return Path(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.params,
            "seeds": self.seeds,
            "version": __version__,
            "outputs": self.outputs,
            "wall_clock_seconds": time.perf_counter() - self._t0,
        }

    def write(self, path) -> Path:
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise FileNotFoundError(f"manifest lists missing outputs: {missing}")
        return write_json(path, self.to_dict())
