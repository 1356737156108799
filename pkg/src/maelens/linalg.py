"""Dense symmetric linear algebra used by the closed-form solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConvergenceError, DimensionError, NotPositiveDefiniteError

__all__ = ["EigPair", "blkdiag", "sym_factor", "gen_sym_eig", "symmetrize", "SYM_ATOL"]

SYM_ATOL = 1e-12


def symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def _as_square(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    return M


def blkdiag(M, layout) -> np.ndarray:
    """Keep entries whose row and column dims share a patch; zero the rest."""
    M = _as_square(M)
    if M.shape[0] != layout.dim:
        raise DimensionError(f"matrix is {M.shape[0]}x{M.shape[0]} but layout has {layout.dim} dims")
    ids = layout.patch_ids
    return np.where(ids[:, None] == ids[None, :], M, 0.0)


def sym_factor(S, rtol: float = 1e-10) -> np.ndarray:
    """Return G with ``G.T @ G == S`` for a PSD matrix S.

    Eigenvalues in ``[-rtol * ||S||, 0)`` are treated as rounding and
    clipped to zero; anything more negative raises.
    """
    S = symmetrize(_as_square(S))
    w, Q = np.linalg.eigh(S)
    scale = np.max(np.abs(w)) if w.size else 0.0
    if w[0] < -rtol * scale:
        raise NotPositiveDefiniteError(f"matrix is indefinite: smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return np.sqrt(w)[:, None] * Q.T


@dataclass(frozen=True)
class EigPair:
    """Generalized eigenpairs, values descending, column i of ``vectors`` paired with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    def top(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.values[:k], self.vectors[:, :k]


def _descending_order(w: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    # eigh returns ascending values; walk from the top and keep ties in index order
    order = list(np.argsort(-w, kind="stable"))
    scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(w[order[i]] - w[order[j]]) <= rtol * scale:
            j += 1
        out.extend(sorted(order[i:j]))
        i = j
    return np.asarray(out, dtype=int)


def _fix_signs(V: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    V = V.copy()
    for c in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, c]) > atol)
        if nz.size and V[nz[0], c] < 0:
            V[:, c] = -V[:, c]
    return V


def gen_sym_eig(C, D=None) -> EigPair:
    """Solve ``C v = lam D v`` for symmetric C and SPD D.

    Reduces to a standard problem with the Cholesky factor ``D = L L^T``,
    diagonalises ``L^-1 C L^-T`` and maps eigenvectors back through
    ``L^-T``, so the returned vectors are D-orthonormal. ``D=None`` means
    the identity.
    """
    C = symmetrize(_as_square(C, "C"))
    d = C.shape[0]
    if D is None:
        L = None
        Cr = C
    else:
        D = symmetrize(_as_square(D, "D"))
        if D.shape != C.shape:
            raise DimensionError(f"C is {C.shape} but D is {D.shape}")
        dw = np.linalg.eigvalsh(D)
        if dw[0] <= 1e-12 * dw[-1] or dw[-1] <= 0:
            raise NotPositiveDefiniteError(
                f"D is not positive definite (eigenvalue range {dw[0]:.3e}..{dw[-1]:.3e})"
            )
        L = np.linalg.cholesky(D)
        Y = solve_triangular(L, C, lower=True)
        Cr = symmetrize(solve_triangular(L, Y.T, lower=True))
    try:
        w, W = np.linalg.eigh(Cr)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"symmetric eigensolver failed on a {d}x{d} problem") from exc
    order = _descending_order(w)
    w, W = w[order], W[:, order]
    V = W if L is None else solve_triangular(L.T, W, lower=False)
    return EigPair(values=w, vectors=_fix_signs(V))
