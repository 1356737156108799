import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from maelens.errors import DimensionError, NotPositiveDefiniteError
from maelens.layout import Grid2D, Ring1D
from maelens.linalg import blkdiag, gen_sym_eig, sym_factor


def random_spd(rng, d, jitter=0.1):
    M = rng.standard_normal((d, d))
    return M @ M.T + jitter * np.eye(d)


def blkdiag_loops(M, layout):
    out = np.zeros_like(M)
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            if layout.patch_of(i) == layout.patch_of(j):
                out[i, j] = M[i, j]
    return out


class TestBlkdiag:
    def test_single_patch_is_identity_map(self):
        M = np.random.default_rng(0).standard_normal((6, 6))
        np.testing.assert_array_equal(blkdiag(M, Ring1D(6, 6)), M)

    def test_unit_patches_keep_diagonal(self):
        M = np.random.default_rng(1).standard_normal((5, 5))
        np.testing.assert_array_equal(blkdiag(M, Ring1D(5, 1)), np.diag(np.diag(M)))

    def test_ones_with_patch_two(self):
        expected = np.array([[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], float)
        np.testing.assert_array_equal(blkdiag(np.ones((4, 4)), Ring1D(4, 2)), expected)

    @pytest.mark.parametrize("layout", [Ring1D(12, 3), Ring1D(8, 4), Grid2D(4, 4, 2, 2), Grid2D(6, 6, 1, 3)])
    def test_matches_loop_definition(self, layout):
        M = np.random.default_rng(2).standard_normal((layout.dim, layout.dim))
        np.testing.assert_array_equal(blkdiag(M, layout), blkdiag_loops(M, layout))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            blkdiag(np.eye(5), Ring1D(4, 2))

    @given(st.integers(0, 10_000), st.sampled_from([(12, 1), (12, 2), (12, 3), (12, 4), (12, 12)]))
    @settings(max_examples=40, deadline=None)
    def test_idempotent_and_trace_preserving(self, seed, dp):
        layout = Ring1D(*dp)
        M = np.random.default_rng(seed).standard_normal((12, 12))
        M = M + M.T
        once = blkdiag(M, layout)
        np.testing.assert_array_equal(blkdiag(once, layout), once)
        assert np.trace(once) == np.trace(M)
        np.testing.assert_array_equal(once, once.T)


class TestSymFactor:
    def test_identity(self):
        G = sym_factor(np.eye(4))
        np.testing.assert_allclose(G.T @ G, np.eye(4), atol=1e-14)

    def test_diagonal(self):
        G = sym_factor(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(G.T @ G, np.diag([4.0, 9.0]), atol=1e-13)

    def test_random_psd_6x6(self):
        rng = np.random.default_rng(3)
        S = random_spd(rng, 6)
        G = sym_factor(S)
        assert np.linalg.norm(G.T @ G - S) / np.linalg.norm(S) < 1e-10

    def test_rank_deficient_with_rounding_noise(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((3, 8))
        S = X.T @ X  # rank 3, tiny negative eigenvalues from rounding
        G = sym_factor(S)
        assert np.linalg.norm(G.T @ G - S) / np.linalg.norm(S) < 1e-10

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefiniteError):
            sym_factor(np.diag([1.0, -0.5]))

    @given(st.integers(0, 10_000), st.integers(1, 10), st.integers(1, 10))
    @settings(max_examples=50, deadline=None)
    def test_reconstruction_property(self, seed, d, r):
        X = np.random.default_rng(seed).standard_normal((r, d))
        S = X.T @ X
        G = sym_factor(S)
        assert np.linalg.norm(G.T @ G - S) <= 1e-10 * max(np.linalg.norm(S), 1e-300) + 1e-300


class TestGenSymEig:
    def test_diagonal_standard(self):
        res = gen_sym_eig(np.diag([3.0, 1.0, 2.0]), np.eye(3))
        np.testing.assert_allclose(res.values, [3.0, 2.0, 1.0], atol=1e-14)

    def test_equal_pair_gives_unit_values(self):
        D = random_spd(np.random.default_rng(5), 5)
        np.testing.assert_allclose(gen_sym_eig(D, D).values, np.ones(5), atol=1e-10)

    def test_random_pair_residual_and_orthonormality(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((5, 5))
        C, D = M + M.T, random_spd(rng, 5)
        res = gen_sym_eig(C, D)
        for lam, v in zip(res.values, res.vectors.T):
            assert np.linalg.norm(C @ v - lam * (D @ v)) <= 1e-8 * np.linalg.norm(C, 2)
        np.testing.assert_allclose(res.vectors.T @ D @ res.vectors, np.eye(5), atol=1e-8)

    def test_values_match_scipy_generalized_solver(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((7, 7))
        C, D = M + M.T, random_spd(rng, 7)
        ref = scipy.linalg.eigh(C, D, eigvals_only=True)[::-1]
        np.testing.assert_allclose(gen_sym_eig(C, D).values, ref, rtol=1e-10, atol=1e-12)

    def test_identity_metric_matches_standard_eigh(self):
        rng = np.random.default_rng(8)
        M = rng.standard_normal((9, 9))
        C = M + M.T
        ref = np.linalg.eigvalsh(C)[::-1]
        np.testing.assert_allclose(gen_sym_eig(C).values, ref, rtol=1e-10)
        np.testing.assert_allclose(gen_sym_eig(C, np.eye(9)).values, ref, rtol=1e-10)

    def test_sign_convention(self):
        rng = np.random.default_rng(9)
        C = random_spd(rng, 6)
        V = gen_sym_eig(C).vectors
        for v in V.T:
            first = v[np.flatnonzero(np.abs(v) > 1e-9)[0]]
            assert first > 0

    def test_ties_keep_index_order(self):
        C = np.diag([2.0, 5.0, 2.0, 1.0])
        res = gen_sym_eig(C)
        np.testing.assert_allclose(res.values, [5.0, 2.0, 2.0, 1.0])
        # tied pair keeps the ascending-index order of the standard solver's output
        w, W = np.linalg.eigh(C)
        tied = np.flatnonzero(np.isclose(w, 2.0))
        for pos, src in zip((1, 2), tied):
            np.testing.assert_allclose(np.abs(res.vectors[:, pos]), np.abs(W[:, src]), atol=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        C, D = random_spd(rng, 6), random_spd(rng, 6)
        a, b = gen_sym_eig(C, D), gen_sym_eig(C, D)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.vectors, b.vectors)

    def test_rejects_non_spd_metric(self):
        with pytest.raises(NotPositiveDefiniteError):
            gen_sym_eig(np.eye(3), np.diag([1.0, 0.0, 1.0]))
        with pytest.raises(NotPositiveDefiniteError):
            gen_sym_eig(np.eye(2), np.diag([1.0, -1.0]))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            gen_sym_eig(np.eye(3), np.eye(4))
