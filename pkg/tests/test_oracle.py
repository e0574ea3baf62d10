"""Monte-Carlo and hand-arithmetic checks of the exact-variance noise oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from driftopt.objectives import make_quadratic
from driftopt.oracle import OracleSample, wrap


def forced_sample(rho: float, d: int, u: np.ndarray | None = None) -> OracleSample:
    return OracleSample(rho=rho, u=np.zeros(d) if u is None else u)


def trace_covariance(samples: np.ndarray) -> float:
    """Unbiased trace-of-covariance of row vectors: (1/(N-1)) sum ||g_i - mean||^2."""
    centered = samples - samples.mean(axis=0)
    return float((centered * centered).sum()) / (samples.shape[0] - 1)


class TestVarianceIdentity:
    @pytest.mark.parametrize("radius", [0.0, 2.0, 10.0])
    def test_sample_variance_matches_closed_form(self, radius):
        """Trace of covariance equals B^2 r^2 + G^2 (Monte-Carlo, 3% band)."""
        d, n = 100, 20_000
        obj = make_quadratic(d, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(d))
        x = np.zeros(d)
        x[0] = radius
        rng = np.random.default_rng(2024)
        draws = np.empty((n, d))
        for i in range(n):
            draws[i] = oracle.stoch_grad(x, oracle.draw_sample(rng))
        expected = 1.0 * radius**2 + 1.0
        assert trace_covariance(draws) == pytest.approx(expected, rel=0.03)
        assert oracle.variance_at(x) == pytest.approx(expected, rel=1e-12)

    def test_variance_reflects_B_and_G_separately(self):
        d = 4
        obj = make_quadratic(d, 1.0)
        oracle = wrap(obj, B=2.0, G=0.5, x0=np.ones(d))
        x = np.ones(d) + np.array([3.0, 0.0, 0.0, 0.0])
        assert oracle.variance_at(x) == pytest.approx(4.0 * 9.0 + 0.25, rel=1e-12)


class TestUnbiasedness:
    def test_gradient_mean_within_three_standard_errors(self):
        d, n = 5, 20_000
        obj = make_quadratic(d, 1.5)
        x0 = np.zeros(d)
        oracle = wrap(obj, B=1.0, G=1.0, x0=x0)
        x = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
        rng = np.random.default_rng(7)
        total = np.zeros(d)
        for _ in range(n):
            total += oracle.stoch_grad(x, oracle.draw_sample(rng))
        mean = total / n
        comp_std = np.sqrt(1.0 * (x - x0) ** 2 + 1.0 / d)
        band = 3.0 * comp_std / math.sqrt(n)
        assert np.all(np.abs(mean - obj.grad(x)) <= band)

    def test_loss_mean_within_three_standard_errors(self):
        d, n = 5, 20_000
        obj = make_quadratic(d, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(d))
        x = np.array([1.0, 1.0, 0.0, -1.0, 1.0])
        r_sq = float(x @ x)
        rng = np.random.default_rng(11)
        total = 0.0
        for _ in range(n):
            total += oracle.stoch_loss(x, oracle.draw_sample(rng))
        loss_std = math.sqrt(0.25 * r_sq**2 + r_sq / d)
        band = 3.0 * loss_std / math.sqrt(n)
        assert abs(total / n - obj.eval(x)) <= band

    def test_loss_at_reference_point_is_exact(self):
        d = 3
        obj = make_quadratic(d, 2.0)
        x0 = np.array([1.0, 2.0, 3.0])
        oracle = wrap(obj, B=5.0, G=5.0, x0=x0)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert oracle.stoch_loss(x0, oracle.draw_sample(rng)) == obj.eval(x0)


class TestHandArithmetic:
    def test_forced_sample_gradient(self):
        """rho=+1, u=0, quadratic c=1, B=1, x0=0, x=(2,0) -> (4,0)."""
        obj = make_quadratic(2, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(2))
        g = oracle.stoch_grad(np.array([2.0, 0.0]), forced_sample(1.0, 2))
        np.testing.assert_array_equal(g, np.array([4.0, 0.0]))

    def test_forced_sample_loss(self):
        """rho=+1, u=0, B=2, ||x - x0|| = 1 -> f(x) + 1."""
        obj = make_quadratic(2, 1.0)
        oracle = wrap(obj, B=2.0, G=1.0, x0=np.zeros(2))
        x = np.array([1.0, 0.0])
        assert oracle.stoch_loss(x, forced_sample(1.0, 2)) == obj.eval(x) + 1.0

    def test_deterministic_case_is_exact(self):
        obj = make_quadratic(3, 2.0)
        oracle = wrap(obj, B=0.0, G=0.0, x0=np.zeros(3))
        x = np.array([1.0, -1.0, 2.0])
        rng = np.random.default_rng(1)
        g = oracle.stoch_grad(x, oracle.draw_sample(rng))
        np.testing.assert_array_equal(g, obj.grad(x))

    def test_distance_term_vanishes_at_reference(self):
        d = 3
        obj = make_quadratic(d, 1.0)
        x0 = np.array([1.0, 2.0, 3.0])
        oracle = wrap(obj, B=7.0, G=2.0, x0=x0)
        u = np.array([0.1, -0.2, 0.3])
        g = oracle.stoch_grad(x0, OracleSample(rho=-1.0, u=u))
        np.testing.assert_allclose(g, obj.grad(x0) + 2.0 * u, rtol=0, atol=1e-15)


class TestPairedEvaluation:
    def test_same_point_gives_bitwise_identical_outputs(self):
        obj = make_quadratic(4, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(4))
        rng = np.random.default_rng(5)
        x = rng.standard_normal(4)
        gx, gy = oracle.paired_stoch_grads(x, x, oracle.draw_sample(rng))
        np.testing.assert_array_equal(gx, gy)

    @pytest.mark.parametrize("rho", [-1.0, 1.0])
    def test_quadratic_difference_closed_form(self, rho):
        """Shared-sample difference on the quadratic is (c + B rho)(y - x)."""
        c, B = 1.5, 2.0
        obj = make_quadratic(3, c)
        oracle = wrap(obj, B=B, G=1.0, x0=np.zeros(3))
        rng = np.random.default_rng(9)
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        u = rng.standard_normal(3) / math.sqrt(3)
        gx, gy = oracle.paired_stoch_grads(x, y, OracleSample(rho=rho, u=u))
        np.testing.assert_allclose(gy - gx, (c + B * rho) * (y - x), rtol=1e-12, atol=1e-14)

    def test_difference_is_deterministic_when_B_is_zero(self):
        obj = make_quadratic(3, 1.0)
        oracle = wrap(obj, B=0.0, G=3.0, x0=np.zeros(3))
        rng = np.random.default_rng(21)
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        diffs = []
        for _ in range(5):
            gx, gy = oracle.paired_stoch_grads(x, y, oracle.draw_sample(rng))
            diffs.append(gy - gx)
        for diff in diffs:
            np.testing.assert_allclose(diff, obj.grad(y) - obj.grad(x), rtol=0, atol=1e-12)


class TestBatchEvaluation:
    def test_deterministic_batch_is_exact_and_charges_batch(self):
        obj = make_quadratic(3, 1.0)
        oracle = wrap(obj, B=0.0, G=0.0, x0=np.zeros(3))
        x = np.array([1.0, 2.0, 3.0])
        g = oracle.stoch_grad_batch(x, 100, np.random.default_rng(0))
        np.testing.assert_array_equal(g, obj.grad(x))
        assert oracle.sfo_counter == 100

    def test_batch_of_one_has_sign_structure_of_single_sample(self):
        """With G=0 the batch-1 noise is exactly +-B(x - x0), like one sample."""
        obj = make_quadratic(2, 1.0)
        oracle = wrap(obj, B=1.0, G=0.0, x0=np.zeros(2))
        x = np.array([3.0, 0.0])
        rng = np.random.default_rng(13)
        signs = set()
        for _ in range(64):
            g = oracle.stoch_grad_batch(x, 1, rng)
            noise = g - obj.grad(x)
            assert abs(noise[0]) == 3.0 and noise[1] == 0.0
            signs.add(np.sign(noise[0]))
        assert signs == {-1.0, 1.0}

    def test_variance_scales_inversely_with_batch(self):
        """batch=16 variance is the batch=1 variance / 16 (10% band, 2e4 trials)."""
        d, n = 20, 20_000
        obj = make_quadratic(d, 1.0)
        x = np.full(d, 0.5)
        rng = np.random.default_rng(33)
        draws_1 = np.empty((n, d))
        draws_16 = np.empty((n, d))
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(d))
        for i in range(n):
            draws_1[i] = oracle.stoch_grad_batch(x, 1, rng)
            draws_16[i] = oracle.stoch_grad_batch(x, 16, rng)
        v1 = trace_covariance(draws_1)
        v16 = trace_covariance(draws_16)
        expected = 1.0 * float(x @ x) + 1.0
        assert v1 == pytest.approx(expected, rel=0.03)
        assert v16 == pytest.approx(v1 / 16.0, rel=0.10)

    def test_rejects_empty_batch(self):
        obj = make_quadratic(2, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(2))
        with pytest.raises(ValueError):
            oracle.stoch_grad_batch(np.zeros(2), 0, np.random.default_rng(0))

    def test_paired_batch_shares_noise_across_points(self):
        c, B, batch = 1.0, 2.0, 8
        obj = make_quadratic(3, c)
        oracle = wrap(obj, B=B, G=1.0, x0=np.zeros(3))
        rng = np.random.default_rng(17)
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        gx, gy = oracle.paired_stoch_grads_batch(x, y, batch, rng)
        # shared batch noise: difference = (c + B rho_bar)(y - x) for some
        # rho_bar in {-1, -1+2/b, ..., 1}; recover it and check admissibility
        ratio = (gy - gx) / (y - x)
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-10)
        rho_bar = (ratio[0] - c) / B
        assert abs(rho_bar * batch - round(rho_bar * batch)) < 1e-9
        assert -1.0 - 1e-12 <= rho_bar <= 1.0 + 1e-12
        assert oracle.sfo_counter == 2 * batch


class TestSampling:
    def test_sample_statistics(self):
        """E[rho] ~ 0 and E||u||^2 ~ 1 over 1e5 draws at d=100."""
        d, n = 100, 100_000
        obj = make_quadratic(d, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(d))
        rng = np.random.default_rng(101)
        rho_total = 0.0
        u_sq_total = 0.0
        for _ in range(n):
            s = oracle.draw_sample(rng)
            assert s.rho * s.rho == 1.0
            rho_total += s.rho
            u_sq_total += float(s.u @ s.u)
        assert -0.02 <= rho_total / n <= 0.02
        assert 0.98 <= u_sq_total / n <= 1.02

    def test_identically_seeded_streams_are_bitwise_identical(self):
        obj = make_quadratic(10, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(10))
        s1 = oracle.draw_sample(np.random.default_rng(99))
        s2 = oracle.draw_sample(np.random.default_rng(99))
        assert s1.rho == s2.rho
        np.testing.assert_array_equal(s1.u, s2.u)


class TestSfoLedger:
    def test_counter_tracks_every_call_kind(self):
        obj = make_quadratic(3, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(3))
        rng = np.random.default_rng(3)
        x, y = np.ones(3), 2.0 * np.ones(3)
        assert oracle.sfo_counter == 0
        s = oracle.draw_sample(rng)          # free
        oracle.stoch_loss(x, s)              # free
        assert oracle.sfo_counter == 0
        oracle.stoch_grad(x, s)              # +1
        oracle.stoch_grad_batch(x, 7, rng)   # +7
        oracle.paired_stoch_grads(x, y, s)   # +2
        oracle.paired_stoch_grads_batch(x, y, 5, rng)  # +10
        oracle.stoch_grad(y, s)              # +1
        assert oracle.sfo_counter == 1 + 7 + 2 + 10 + 1

    def test_precomputed_base_grad_changes_nothing_but_cost(self):
        obj = make_quadratic(3, 2.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(3))
        x = np.array([1.0, 2.0, -1.0])
        s = OracleSample(rho=-1.0, u=np.array([0.3, 0.0, -0.1]))
        g_plain = oracle.stoch_grad(x, s)
        g_cached = oracle.stoch_grad(x, s, base_grad=obj.grad(x))
        np.testing.assert_array_equal(g_plain, g_cached)
        assert oracle.sfo_counter == 2


class TestConstruction:
    def test_rejects_dimension_mismatch(self):
        obj = make_quadratic(3, 1.0)
        with pytest.raises(ValueError):
            wrap(obj, B=1.0, G=1.0, x0=np.zeros(4))

    def test_rejects_negative_coefficients(self):
        obj = make_quadratic(3, 1.0)
        with pytest.raises(ValueError):
            wrap(obj, B=-1.0, G=1.0, x0=np.zeros(3))
        with pytest.raises(ValueError):
            wrap(obj, B=1.0, G=-0.5, x0=np.zeros(3))

    def test_evaluation_rejects_wrong_shape(self):
        obj = make_quadratic(3, 1.0)
        oracle = wrap(obj, B=1.0, G=1.0, x0=np.zeros(3))
        with pytest.raises(ValueError):
            oracle.stoch_grad(np.zeros(4), forced_sample(1.0, 3))
