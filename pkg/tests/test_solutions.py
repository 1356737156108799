import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maelens.correlation import IsingSpec, ising_correlation
from maelens.errors import DimensionError
from maelens.layout import Grid2D, Ring1D
from maelens.solutions import (
    LinearModel,
    ae_optimum,
    critical_point,
    critical_points,
    dae_loss,
    dae_loss_grad,
    dae_optimum,
    generalized_eigvalues,
    mae_optimum,
    marginal_loss,
    marginal_loss_grad,
)


def random_spd(rng, d, jitter=0.1):
    M = rng.standard_normal((d, d))
    return M @ M.T + jitter * np.eye(d)


def exact_masked_loss(X, model):
    """E_R ||X - (R*X) A B||^2 by enumerating every patch mask of every row."""
    lay, m = model.layout, model.m
    W = model.projection
    P = lay.n_patches
    total = 0.0
    for pattern in itertools.product([0, 1], repeat=P):
        vis = np.array(pattern)
        prob = np.prod(np.where(vis == 1, 1 - m, m))
        R = vis[lay.patch_ids].astype(float)
        E = X - (X * R) @ W
        total += prob * np.sum(E * E)
    return total


def fd_grad(f, M, h=1e-6):
    G = np.zeros_like(M)
    for idx in np.ndindex(M.shape):
        Mp, Mm = M.copy(), M.copy()
        Mp[idx] += h
        Mm[idx] -= h
        G[idx] = (f(Mp) - f(Mm)) / (2 * h)
    return G


def eig_projector(S, k):
    w, U = np.linalg.eigh(S)
    Uk = U[:, np.argsort(w)[::-1][:k]]
    return Uk @ Uk.T


def block_diagonal_spd(rng, layout):
    S = random_spd(rng, layout.dim)
    same = layout.patch_ids[:, None] == layout.patch_ids[None, :]
    return np.where(same, S, 0.0)


class TestMarginalLoss:
    @pytest.mark.parametrize("m", [0.0, 0.3, 0.5, 0.9, 1.0])
    @pytest.mark.parametrize("layout", [Ring1D(6, 2), Ring1D(6, 3), Grid2D(2, 2, 2, 1)])
    def test_matches_mask_enumeration(self, m, layout):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((7, layout.dim))
        model = LinearModel(rng.standard_normal((layout.dim, 2)), rng.standard_normal((2, layout.dim)), m, layout)
        assert marginal_loss(X.T @ X, model) == pytest.approx(exact_masked_loss(X, model), rel=1e-10)

    def test_zero_weights_give_trace(self):
        S = random_spd(np.random.default_rng(1), 8)
        lay = Ring1D(8, 2)
        z = LinearModel(np.zeros((8, 3)), np.ones((3, 8)), 0.4, lay)
        assert marginal_loss(S, z) == pytest.approx(np.trace(S))

    def test_m_zero_is_plain_reconstruction(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((20, 5))
        A, B = rng.standard_normal((5, 2)), rng.standard_normal((2, 5))
        ref = np.linalg.norm(X - X @ A @ B) ** 2
        assert marginal_loss(X.T @ X, LinearModel(A, B, 0.0, Ring1D(5, 1))) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("m", [0.0, 0.5, 0.8])
    def test_gradient_matches_finite_differences(self, m):
        rng = np.random.default_rng(3)
        lay = Ring1D(8, 2)
        S = random_spd(rng, 8)
        A, B = rng.standard_normal((8, 3)), rng.standard_normal((3, 8))
        gA, gB = marginal_loss_grad(S, LinearModel(A, B, m, lay))
        nA = fd_grad(lambda M: marginal_loss(S, LinearModel(M, B, m, lay)), A)
        nB = fd_grad(lambda M: marginal_loss(S, LinearModel(A, M, m, lay)), B)
        assert np.linalg.norm(gA - nA) / np.linalg.norm(nA) < 1e-5
        assert np.linalg.norm(gB - nB) / np.linalg.norm(nB) < 1e-5

    def test_encoder_gradient_closed_expression(self):
        # dL/dA = -2(1-m) S B^T + 2 V A B B^T with V = (1-m)^2 S + m(1-m) blk(S)
        rng = np.random.default_rng(4)
        lay = Ring1D(6, 3)
        S = random_spd(rng, 6)
        A, B, m = rng.standard_normal((6, 2)), rng.standard_normal((2, 6)), 0.35
        blk = np.where(lay.patch_ids[:, None] == lay.patch_ids[None, :], S, 0.0)
        V = (1 - m) ** 2 * S + m * (1 - m) * blk
        expected = -2 * (1 - m) * S @ B.T + 2 * V @ A @ B @ B.T
        np.testing.assert_allclose(marginal_loss_grad(S, LinearModel(A, B, m, lay))[0], expected, rtol=1e-12)


class TestMAEOptimum:
    @pytest.mark.parametrize("seed", range(5))
    def test_pca_recovery_at_m_zero(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(3, 13))
        k = int(rng.integers(1, d + 1))
        S = random_spd(rng, d)
        sol = mae_optimum(S, 0.0, Ring1D(d, 1), k)
        assert np.linalg.norm(sol.projection - eig_projector(S, k)) < 1e-8

    @pytest.mark.parametrize("m", [0.2, 0.8])
    def test_block_diagonal_sigma_matches_ae(self, m):
        rng = np.random.default_rng(5)
        lay = Ring1D(12, 3)
        S = block_diagonal_spd(rng, lay)
        mae = mae_optimum(S, m, lay, 4)
        ae = ae_optimum(S, 4, lay)
        assert np.linalg.norm(mae.projection - ae.projection) < 1e-8

    def test_loss_matches_eigen_formula(self):
        rng = np.random.default_rng(6)
        lay = Ring1D(12, 4)
        S, m = random_spd(rng, 12), 0.6
        sol = mae_optimum(S, m, lay, 3)
        assert sol.loss == pytest.approx(np.trace(S) - (1 - m) * sol.eigvalues.sum(), rel=1e-10)

    def test_stationary_on_ising(self):
        S = ising_correlation(IsingSpec(32, 2.0))
        lay = Ring1D(32, 8)
        sol = mae_optimum(S, 0.5, lay, 6)
        A, B = sol.model.A, sol.model.B
        gA = fd_grad(lambda M: marginal_loss(S, LinearModel(M, B, 0.5, lay)), A, h=1e-5)
        gB = fd_grad(lambda M: marginal_loss(S, LinearModel(A, M, 0.5, lay)), B, h=1e-5)
        assert max(np.abs(gA).max(), np.abs(gB).max()) < 1e-6 * np.trace(S)

    @given(st.integers(0, 10_000), st.floats(0.05, 0.95))
    @settings(max_examples=25, deadline=None)
    def test_no_perturbation_improves(self, seed, m):
        rng = np.random.default_rng(seed)
        lay = Ring1D(8, 2)
        S = random_spd(rng, 8)
        sol = mae_optimum(S, m, lay, 3)
        for _ in range(5):
            dA = 1e-3 * rng.standard_normal(sol.model.A.shape)
            dB = 1e-3 * rng.standard_normal(sol.model.B.shape)
            pert = LinearModel(sol.model.A + dA, sol.model.B + dB, m, lay)
            assert marginal_loss(S, pert) >= sol.loss - 1e-9 * np.trace(S)

    def test_gauge_invariance(self):
        rng = np.random.default_rng(7)
        lay = Ring1D(10, 2)
        S = random_spd(rng, 10)
        sol = mae_optimum(S, 0.4, lay, 3)
        C = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        moved = LinearModel(sol.model.A @ np.linalg.inv(C), C @ sol.model.B, 0.4, lay)
        assert marginal_loss(S, moved) == pytest.approx(sol.loss, rel=1e-10)

    def test_loss_non_increasing_in_k(self):
        S = ising_correlation(IsingSpec(16, 1.0))
        lay = Ring1D(16, 4)
        losses = [mae_optimum(S, 0.5, lay, k).loss for k in range(1, 17)]
        assert np.all(np.diff(losses) <= 1e-10)

    def test_generalized_values_positive_and_sorted(self):
        S = random_spd(np.random.default_rng(8), 9)
        lam = generalized_eigvalues(S, 0.5, Ring1D(9, 3))
        assert np.all(lam > 0) and np.all(np.diff(lam) <= 1e-12)

    def test_singular_v_is_regularized_with_warning(self):
        S = np.diag([1.0, 1.0, 0.0, 0.0])
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            sol = mae_optimum(S, 0.5, Ring1D(4, 2), 1)
        assert any("ill-conditioned" in str(x.message) for x in w)
        assert np.all(np.isfinite(sol.model.A))

    def test_invalid_inputs(self):
        S = np.eye(4)
        with pytest.raises(DimensionError):
            mae_optimum(S, 0.5, Ring1D(4, 2), 5)
        with pytest.raises(DimensionError):
            mae_optimum(np.eye(6), 0.5, Ring1D(4, 2), 1)
        with pytest.raises(ValueError):
            mae_optimum(S, 1.5, Ring1D(4, 2), 1)


class TestAE:
    def test_diagonal_example(self):
        sol = ae_optimum(np.diag([5.0, 3.0, 1.0]), 2)
        assert sol.loss == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(sol.projection, np.diag([1.0, 1.0, 0.0]), atol=1e-12)

    def test_full_rank_is_identity(self):
        S = random_spd(np.random.default_rng(9), 6)
        sol = ae_optimum(S, 6)
        assert abs(sol.loss) < 1e-8
        assert np.linalg.norm(sol.projection - np.eye(6)) < 1e-8

    def test_loss_is_tail_eigenvalue_sum(self):
        S = random_spd(np.random.default_rng(10), 9)
        w = np.sort(np.linalg.eigvalsh(S))[::-1]
        assert ae_optimum(S, 4).loss == pytest.approx(w[4:].sum(), abs=1e-8)


class TestDAE:
    def test_zero_noise_is_ae(self):
        S = random_spd(np.random.default_rng(11), 7)
        dae, ae = dae_optimum(S, 0.0, 100, 3), ae_optimum(S, 3)
        np.testing.assert_allclose(dae.projection, ae.projection, atol=1e-10)
        assert dae.loss == pytest.approx(ae.loss)

    def test_large_noise_shrinks_projection(self):
        S = random_spd(np.random.default_rng(12), 5)
        norms = [np.linalg.norm(dae_optimum(S, s2, 10, 2).projection) for s2 in (0.1, 10.0, 1e4)]
        assert norms[0] > norms[1] > norms[2]
        assert norms[2] < 1e-2

    def test_stationary(self):
        rng = np.random.default_rng(13)
        S = random_spd(rng, 6)
        s2, n = 0.05, 40
        sol = dae_optimum(S, s2, n, 2)
        A, B = sol.model.A, sol.model.B
        gA = fd_grad(lambda M: dae_loss(S, M, B, s2, n), A)
        gB = fd_grad(lambda M: dae_loss(S, A, M, s2, n), B)
        assert max(np.abs(gA).max(), np.abs(gB).max()) < 1e-6 * np.trace(S)

    def test_expected_loss_matches_monte_carlo_noise(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((30, 4))
        A, B, s2 = rng.standard_normal((4, 2)), rng.standard_normal((2, 4)), 0.3
        draws = [np.linalg.norm(X - (X + np.sqrt(s2) * rng.standard_normal(X.shape)) @ A @ B) ** 2
                 for _ in range(20000)]
        se = np.std(draws) / np.sqrt(len(draws))
        assert abs(np.mean(draws) - dae_loss(X.T @ X, A, B, s2, 30)) < 4 * se

    def test_gradient(self):
        rng = np.random.default_rng(15)
        S = random_spd(rng, 5)
        A, B = rng.standard_normal((5, 2)), rng.standard_normal((2, 5))
        gA, gB = dae_loss_grad(S, A, B, 0.2, 7)
        np.testing.assert_allclose(gA, fd_grad(lambda M: dae_loss(S, M, B, 0.2, 7), A), rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(gB, fd_grad(lambda M: dae_loss(S, A, M, 0.2, 7), B), rtol=1e-6, atol=1e-6)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError):
            dae_optimum(np.eye(3), -1.0, 10, 1)


class TestCriticalPoints:
    def test_all_subsets_d6_k2(self):
        rng = np.random.default_rng(16)
        lay, m = Ring1D(6, 2), 0.5
        S = random_spd(rng, 6)
        lam = generalized_eigvalues(S, m, lay)
        pts = critical_points(S, m, lay, 2)
        assert len(pts) == 15
        for subset, model, loss in pts:
            direct = marginal_loss(S, model)
            assert abs(loss - direct) < 1e-8
            assert abs(loss - (np.trace(S) - (1 - m) * lam[list(subset)].sum())) < 1e-8
            single_model, single_loss = critical_point(S, m, lay, subset)
            assert single_loss == pytest.approx(loss, abs=1e-10)
        losses = {s: l for s, _, l in pts}
        assert min(losses, key=losses.get) == (0, 1)
        assert max(losses, key=losses.get) == (4, 5)

    def test_top_subset_equals_optimum(self):
        S = random_spd(np.random.default_rng(17), 8)
        lay = Ring1D(8, 4)
        _, loss = critical_point(S, 0.3, lay, [0, 1, 2])
        assert loss == pytest.approx(mae_optimum(S, 0.3, lay, 3).loss, rel=1e-12)

    def test_every_critical_point_is_stationary(self):
        rng = np.random.default_rng(18)
        S = random_spd(rng, 6)
        lay = Ring1D(6, 3)
        for _, model, _ in critical_points(S, 0.5, lay, 2):
            gA, gB = marginal_loss_grad(S, model)
            assert max(np.abs(gA).max(), np.abs(gB).max()) < 1e-8 * np.trace(S)

    def test_invalid_subset(self):
        with pytest.raises(ValueError):
            critical_point(np.eye(4), 0.5, Ring1D(4, 2), [0, 0])
        with pytest.raises(ValueError):
            critical_point(np.eye(4), 0.5, Ring1D(4, 2), [4])
