"""Matrix kernel tests: factorization invariants, norm values, projection optimality.

The projection test uses an independent grid-search oracle over rank-1
spectral-ball candidates, written against the definition rather than the
implementation.
"""

import numpy as np
import pytest

from rankcap.linalg import (
    ConstraintSet,
    PowerIterationFailure,
    SvdFactors,
    frobenius_norm,
    ky_fan,
    l21_norm_of_transpose,
    numerical_rank,
    project_rank_spectral,
    spectral_norm,
    svd,
)


def grid_distance_rank1_ball(target, cap, n_angles=100):
    """Best Frobenius distance from `target` (2x2) to s*u(a)v(b)^T candidates.

    u, v range over the unit circle on an n_angles x n_angles grid and the
    scale is the distance-minimizing value clipped to [0, cap], so every
    candidate lies in {rank <= 1, spectral norm <= cap}. Returns the minimum
    distance over the grid; a correct nearest-point projection can never be
    farther than this.
    """
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    u = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    v = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    inner = u @ target @ v.T
    scale = np.clip(inner, 0.0, cap)
    dist_sq = np.sum(target * target) - 2.0 * scale * inner + scale * scale
    return float(np.sqrt(np.maximum(dist_sq, 0.0).min()))


class TestSvd:
    def test_diagonal(self):
        f = svd(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(f.values, [3.0, 2.0, 1.0])

    def test_zero_matrix(self):
        f = svd(np.zeros((2, 3)))
        assert f.values.shape == (2,)
        np.testing.assert_allclose(f.values, 0.0)

    def test_reconstruction_random_5x4(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(5, 4))
        f = svd(m)
        residual = np.linalg.norm(f.reconstruct() - m) / np.linalg.norm(m)
        assert residual < 1e-8

    def test_factor_invariants_random_shapes(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            rows = int(rng.integers(1, 33))
            cols = int(rng.integers(1, 33))
            m = rng.normal(size=(rows, cols)) * rng.choice([1e-3, 1.0, 1e3])
            f = svd(m)
            k = min(rows, cols)
            assert f.values.shape == (k,)
            assert np.all(f.values >= 0.0)
            assert np.all(np.diff(f.values) <= 1e-12)
            scale = max(np.linalg.norm(m), 1.0)
            assert np.linalg.norm(f.reconstruct() - m) <= 1e-8 * scale
            np.testing.assert_allclose(f.left.T @ f.left, np.eye(k), atol=1e-8)
            np.testing.assert_allclose(f.right.T @ f.right, np.eye(k), atol=1e-8)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            svd(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-10)

    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 2.0, 1.0])) == pytest.approx(3.0, abs=1e-9)

    def test_zero(self):
        assert spectral_norm(np.zeros((4, 3))) == 0.0

    def test_matches_svd_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            rows = int(rng.integers(1, 13))
            cols = int(rng.integers(1, 13))
            m = rng.normal(size=(rows, cols))
            top = svd(m).values[0]
            assert spectral_norm(m) == pytest.approx(top, rel=1e-6, abs=1e-12)

    def test_degenerate_top_pair(self):
        # equal leading singular values: the value is still well defined
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        m = q @ np.diag([2.0, 2.0, 1.0, 0.5]) @ q.T
        assert spectral_norm(m) == pytest.approx(2.0, rel=1e-6)

    def test_start_vector_in_null_space(self):
        # all-ones start is annihilated; the deterministic rescue must recover
        m = np.array([[1.0, -1.0], [1.0, -1.0]])
        top = np.linalg.svd(m, compute_uv=False)[0]
        assert spectral_norm(m) == pytest.approx(top, rel=1e-6)

    def test_iteration_cap_failure_reports_last_estimate(self):
        m = np.diag([1.0, 1.0 - 1e-9, 0.5])
        with pytest.raises(PowerIterationFailure) as err:
            spectral_norm(m, tol=1e-15, max_iter=2)
        assert err.value.last_estimate == pytest.approx(1.0, rel=5e-2)


class TestScalarNorms:
    def test_frobenius_diag(self):
        assert frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0)

    def test_l21_one_nonzero_row(self):
        m = np.array([[3.0, 4.0], [0.0, 0.0]])
        assert l21_norm_of_transpose(m) == pytest.approx(5.0)

    def test_l21_general(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(5, 7))
        expected = sum(np.linalg.norm(m[i]) for i in range(5))
        assert l21_norm_of_transpose(m) == pytest.approx(expected, rel=1e-12)

    def test_ky_fan_diag(self):
        assert ky_fan(np.diag([3.0, 2.0, 1.0]), 2) == pytest.approx(5.0)

    def test_ky_fan_monotone_and_trace_norm(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m = rng.normal(size=(6, 4))
            values = [ky_fan(m, r) for r in range(1, 5)]
            assert np.all(np.diff(values) >= -1e-12)
            assert values[-1] == pytest.approx(np.sum(svd(m).values), rel=1e-10)

    def test_ky_fan_order_out_of_range(self):
        with pytest.raises(ValueError):
            ky_fan(np.eye(3), 4)
        with pytest.raises(ValueError):
            ky_fan(np.eye(3), 0)


class TestNumericalRank:
    def test_near_singular_diag(self):
        assert numerical_rank(np.diag([3.0, 2.0, 1e-12])) == 2

    def test_zero(self):
        assert numerical_rank(np.zeros((3, 3))) == 0

    def test_outer_product(self):
        rng = np.random.default_rng(6)
        u = rng.normal(size=5)
        v = rng.normal(size=7)
        assert numerical_rank(np.outer(u, v)) == 1


class TestConstraintSet:
    def test_rejects_bad_rank(self):
        with pytest.raises(ValueError):
            ConstraintSet(rank=0, spectral=1.0)

    def test_rejects_negative_cap(self):
        with pytest.raises(ValueError):
            ConstraintSet(rank=1, spectral=-0.5)

    def test_zero_cap_allowed(self):
        # cap 0 expresses the zero function class
        c = ConstraintSet(rank=1, spectral=0.0)
        assert c.spectral == 0.0


class TestProjection:
    def test_singular_values_forced(self):
        out = project_rank_spectral(np.diag([3.0, 2.0, 1.0]), ConstraintSet(2, 2.5))
        np.testing.assert_allclose(out, np.diag([2.5, 2.0, 0.0]), atol=1e-10)

    def test_member_unchanged(self):
        rng = np.random.default_rng(7)
        u = rng.normal(size=3)
        v = rng.normal(size=3)
        m = 0.5 * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
        out = project_rank_spectral(m, ConstraintSet(1, 1.0))
        np.testing.assert_allclose(out, m, atol=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m = rng.normal(size=(5, 4)) * 2.0
            c = ConstraintSet(int(rng.integers(1, 5)), float(rng.uniform(0.2, 2.0)))
            once = project_rank_spectral(m, c)
            twice = project_rank_spectral(once, c)
            np.testing.assert_allclose(twice, once, atol=1e-10)

    def test_result_satisfies_caps(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            m = rng.normal(size=(6, 6)) * 3.0
            c = ConstraintSet(int(rng.integers(1, 7)), float(rng.uniform(0.1, 2.0)))
            out = project_rank_spectral(m, c)
            assert numerical_rank(out) <= c.rank
            assert spectral_norm(out) <= c.spectral * (1.0 + 1e-8)

    def test_zero_cap_gives_zero_matrix(self):
        rng = np.random.default_rng(10)
        out = project_rank_spectral(rng.normal(size=(3, 3)), ConstraintSet(2, 0.0))
        np.testing.assert_allclose(out, 0.0)

    def test_rank_above_min_dim_rejected(self):
        with pytest.raises(ValueError):
            project_rank_spectral(np.eye(3), ConstraintSet(4, 1.0))

    def test_beats_grid_oracle_2x2(self):
        rng = np.random.default_rng(11)
        cap = 1.0
        c = ConstraintSet(1, cap)
        for _ in range(500):
            m = rng.normal(size=(2, 2)) * rng.choice([0.5, 1.0, 2.0])
            projected = project_rank_spectral(m, c)
            dist = np.linalg.norm(projected - m)
            oracle = grid_distance_rank1_ball(m, cap)
            assert dist <= oracle + 1e-3


class TestSvdFactorsType:
    def test_invariant_violation_detected(self):
        with pytest.raises(ValueError):
            SvdFactors(
                left=np.eye(2),
                values=np.array([1.0, 2.0]),  # increasing order is invalid
                right=np.eye(2),
            )
