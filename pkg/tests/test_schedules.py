"""Schedule arithmetic: hand-frozen constants, published values, exponent laws."""

from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from driftopt.schedules import (
    Schedule,
    default_lambda0,
    derived_constants,
    nsgdm_schedule,
    nstorm_schedule,
    validate_conditions,
)

HORIZONS = [1, 2, 10, 100, 1000, 10_000, 1_000_000]


class TestDerivedConstants:
    def test_half_alpha_hand_values(self):
        """alpha=1/2, L0=L1=1: every constant evaluated by hand."""
        c = derived_constants(0.5, 1.0, 1.0)
        assert c.K0 == pytest.approx(8.0, rel=1e-12)
        assert c.K1 == pytest.approx(8.0, rel=1e-12)
        assert c.K2 == pytest.approx(25.0, rel=1e-12)
        assert c.L_alpha == pytest.approx(9.5137, rel=1e-4)
        assert c.c_alpha == 0.25
        assert c.p == 1.0
        # momentum-side family: sqrt(2)+1, sqrt(6), sqrt(6)/2, and the two sums
        assert c.Lbar0 == pytest.approx(2.414213562373095, rel=1e-12)
        assert c.Lbar1 == pytest.approx(2.449489742783178, rel=1e-12)
        assert c.Lbar2 == pytest.approx(1.224744871391589, rel=1e-12)
        assert c.C_alpha == pytest.approx(2.724744871391589, rel=1e-12)
        assert c.Ctilde_alpha == pytest.approx(15.638958433764684, rel=1e-12)

    def test_two_thirds_alpha_hand_values(self):
        c = derived_constants(2.0 / 3.0, 1.0, 1.0)
        assert c.K0 == pytest.approx(16.0, rel=1e-12)
        assert c.K1 == pytest.approx(16.0, rel=1e-12)
        assert c.K2 == pytest.approx(125.0, rel=1e-12)
        assert c.c_alpha == pytest.approx(4.0 / 27.0, rel=1e-12)
        assert c.p == pytest.approx(2.0, rel=1e-12)

    def test_constants_scale_linearly_in_L(self):
        base = derived_constants(0.5, 1.0, 1.0)
        scaled = derived_constants(0.5, 3.0, 1.0)
        assert scaled.K0 == pytest.approx(3.0 * base.K0, rel=1e-12)
        assert scaled.K1 == base.K1

    @given(
        alpha=st.floats(0.01, 0.9),
        L0=st.floats(1e-3, 1e3),
        L1=st.floats(1e-3, 1e3),
    )
    def test_all_constants_finite_and_positive(self, alpha, L0, L1):
        c = derived_constants(alpha, L0, L1)
        for name in ("K0", "K1", "K2", "L_alpha", "c_alpha", "p",
                     "Lbar0", "Lbar1", "Lbar2", "C_alpha", "Ctilde_alpha"):
            value = getattr(c, name)
            assert math.isfinite(value) and value > 0.0, name
        assert c.p == pytest.approx(alpha / (1.0 - alpha), rel=1e-12)

    def test_rejects_unrepresentable_near_one_alpha(self):
        """1/(1-alpha) exponents overflow doubles; rejected, never inf."""
        with pytest.raises(ValueError):
            derived_constants(0.999, 10.0, 10.0)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.3])
    def test_rejects_alpha_outside_open_interval(self, alpha):
        with pytest.raises(ValueError):
            derived_constants(alpha, 1.0, 1.0)

    def test_rejects_nonpositive_constants(self):
        with pytest.raises(ValueError):
            derived_constants(0.5, 0.0, 1.0)
        with pytest.raises(ValueError):
            derived_constants(0.5, 1.0, -1.0)


class TestMomentumSchedule:
    def test_published_values_large_scale(self):
        """T=10001, gamma0=10: gamma ~ 4.641e-3, eta ~ 2.154e-3."""
        s = nsgdm_schedule("bg0", 10001, 10.0)
        assert s.gamma == pytest.approx(4.641e-3, rel=5e-4)
        assert s.eta == pytest.approx(2.154e-3, rel=5e-4)
        assert s.n_init == 1

    def test_published_values_unit_scale(self):
        s = nsgdm_schedule("bg0", 10001, 1.0)
        assert s.gamma == pytest.approx(4.641e-4, rel=5e-4)
        assert s.eta == pytest.approx(2.154e-3, rel=5e-4)

    def test_deterministic_square_root_step(self):
        s = nsgdm_schedule("deterministic", 100, 1.0)
        assert s.gamma == 0.1
        assert s.eta == 1.0

    def test_horizon_one_collapses_to_knobs(self):
        for regime in ("bg0", "bounded_variance", "deterministic"):
            s = nsgdm_schedule(regime, 1, 2.5)
            assert s.gamma == 2.5
            assert s.eta == 1.0

    @pytest.mark.parametrize(
        "regime,gamma_exp,eta_exp",
        [
            ("bg0", -5.0 / 6.0, -2.0 / 3.0),
            ("bounded_variance", -0.75, -0.5),
            ("deterministic", -0.5, 0.0),
        ],
    )
    def test_exponents_exact_on_log_log_grid(self, regime, gamma_exp, eta_exp):
        a = nsgdm_schedule(regime, 1000, 3.0)
        b = nsgdm_schedule(regime, 1_000_000, 3.0)
        span = math.log(1_000_000 / 1000)
        assert math.log(b.gamma / a.gamma) / span == pytest.approx(gamma_exp, abs=1e-12)
        if eta_exp == 0.0:
            assert a.eta == b.eta == 1.0
        else:
            assert math.log(b.eta / a.eta) / span == pytest.approx(eta_exp, abs=1e-12)

    def test_monotone_in_horizon(self):
        for regime in ("bg0", "bounded_variance", "deterministic"):
            gammas = [nsgdm_schedule(regime, T, 1.0).gamma for T in HORIZONS]
            etas = [nsgdm_schedule(regime, T, 1.0).eta for T in HORIZONS]
            assert all(x >= y for x, y in zip(gammas, gammas[1:]))
            assert all(x >= y for x, y in zip(etas, etas[1:]))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            nsgdm_schedule("anchored", 100, 1.0)
        with pytest.raises(ValueError):
            nsgdm_schedule("bg0", 0, 1.0)
        with pytest.raises(ValueError):
            nsgdm_schedule("bg0", 100, 0.0)


class TestEstimatorSchedule:
    def test_published_values_quartic_instance(self):
        """alpha=2/3, T=10001, gamma0=7.5: the sharp-init batch resolves to 4."""
        s = nstorm_schedule("expected_sym_alpha", 2.0 / 3.0, 10001, 7.5, 1.0, G=1.0)
        assert s.gamma == pytest.approx(5.397e-3, rel=5e-4)
        assert s.eta == pytest.approx(3.73e-4, rel=2e-3)
        assert s.n_init == 4

    def test_published_values_cubic_instance(self):
        s = nstorm_schedule("expected_sym_alpha", 0.5, 10001, 1.0, 1.0, G=0.5)
        assert s.gamma == pytest.approx(7.742e-4, rel=5e-4)
        assert s.eta == pytest.approx(2.782e-4, rel=5e-4)
        assert s.n_init == 2

    def test_mss_integer_powers(self):
        s = nstorm_schedule("mss", None, 10_000, 1.0, G=1.0)
        assert s.eta == pytest.approx(1e-4, rel=1e-12)
        assert s.gamma == pytest.approx(1e-3, rel=1e-12)
        assert s.n_init == 100  # ceil(1 * 10000^(1/2)) lands exactly on the integer

    def test_sym_one_single_sample_init(self):
        s = nstorm_schedule("expected_sym_one", None, 100_000, 1.0, G=5.0)
        assert s.n_init == 1
        assert s.gamma == pytest.approx(100_000.0**-0.8, rel=1e-12)
        assert s.eta == pytest.approx(100_000.0**-0.8, rel=1e-12)

    def test_bounded_variance_is_smoothness_blind(self):
        s = nstorm_schedule("bounded_variance", None, 1000, 2.0, 0.5, G=3.0)
        assert s.gamma == pytest.approx(2.0 * 1000.0 ** (-2.0 / 3.0), rel=1e-12)
        assert s.eta == pytest.approx(0.5 * 1000.0 ** (-2.0 / 3.0), rel=1e-12)
        assert s.n_init == 1

    def test_horizon_one_collapses_to_knobs(self):
        s = nstorm_schedule("expected_sym_alpha", 0.5, 1, 2.5, 0.7, G=1.0)
        assert s.gamma == 2.5
        assert s.eta == 0.7

    @pytest.mark.parametrize(
        "regime,alpha,gamma_exp,eta_exp",
        [
            ("mss", None, -0.75, -1.0),
            ("expected_sym_alpha", 0.5, -7.0 / 9.0, -8.0 / 9.0),
            ("expected_sym_alpha", 2.0 / 3.0, -11.0 / 14.0, -6.0 / 7.0),
            ("expected_sym_one", None, -0.8, -0.8),
            ("bounded_variance", None, -2.0 / 3.0, -2.0 / 3.0),
        ],
    )
    def test_exponents_exact_on_log_log_grid(self, regime, alpha, gamma_exp, eta_exp):
        a = nstorm_schedule(regime, alpha, 1000, 3.0, 1.0, G=1.0)
        b = nstorm_schedule(regime, alpha, 1_000_000, 3.0, 1.0, G=1.0)
        span = math.log(1_000_000 / 1000)
        assert math.log(b.gamma / a.gamma) / span == pytest.approx(gamma_exp, abs=1e-12)
        assert math.log(b.eta / a.eta) / span == pytest.approx(eta_exp, abs=1e-12)

    def test_monotone_in_horizon(self):
        for regime, alpha in [("mss", None), ("expected_sym_alpha", 0.5),
                              ("expected_sym_one", None), ("bounded_variance", None)]:
            schedules = [nstorm_schedule(regime, alpha, T, 1.0, 1.0, G=2.0) for T in HORIZONS]
            gammas = [s.gamma for s in schedules]
            etas = [s.eta for s in schedules]
            inits = [s.n_init for s in schedules]
            assert all(x >= y for x, y in zip(gammas, gammas[1:]))
            assert all(x >= y for x, y in zip(etas, etas[1:]))
            assert all(x <= y for x, y in zip(inits, inits[1:]))

    def test_sharp_init_grows_with_noise_floor(self):
        small = nstorm_schedule("mss", None, 10_000, 1.0, G=0.5)
        large = nstorm_schedule("mss", None, 10_000, 1.0, G=2.0)
        assert small.n_init == 25  # ceil(0.25 * 100)
        assert large.n_init == 400

    def test_rejects_missing_or_bad_alpha(self):
        with pytest.raises(ValueError):
            nstorm_schedule("expected_sym_alpha", None, 100, 1.0, 1.0, G=1.0)
        with pytest.raises(ValueError):
            nstorm_schedule("expected_sym_alpha", 1.0, 100, 1.0, 1.0, G=1.0)
        with pytest.raises(ValueError):
            nstorm_schedule("page", None, 100, 1.0, 1.0, G=1.0)


class TestScheduleType:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            Schedule(method="nsgdm", regime="bg0", T=0, gamma=0.1, eta=0.5)
        with pytest.raises(ValueError):
            Schedule(method="nsgdm", regime="bg0", T=10, gamma=0.0, eta=0.5)
        with pytest.raises(ValueError):
            Schedule(method="nsgdm", regime="bg0", T=10, gamma=0.1, eta=0.0)
        with pytest.raises(ValueError):
            Schedule(method="nsgdm", regime="bg0", T=10, gamma=0.1, eta=1.2)
        with pytest.raises(ValueError):
            Schedule(method="nsgdm", regime="bg0", T=10, gamma=0.1, eta=0.5, n_init=0)

    def test_metadata_round_trips_through_json(self):
        s = nstorm_schedule("expected_sym_alpha", 0.5, 10001, 1.0, 1.0, G=0.5)
        blob = json.dumps(s.to_metadata())
        back = json.loads(blob)
        assert back["gamma"] == s.gamma
        assert back["n_init"] == 2
        assert back["knobs"]["alpha"] == 0.5


class TestConditionValidation:
    def test_sym_one_momentum_limit(self):
        ok = nsgdm_schedule("bg0", 1000, 0.1)
        bad = nsgdm_schedule("bg0", 1000, 0.2)
        assert validate_conditions(ok, (1.0, 1.0)) == []
        violations = validate_conditions(bad, (1.0, 1.0))
        assert len(violations) == 1 and "1/(8*L1)" in violations[0]

    def test_sym_alpha_momentum_boundary_is_inclusive(self):
        ledger = derived_constants(0.5, 1.0, 1.0)
        assert validate_conditions(nsgdm_schedule("bg0", 1000, 1.0), ledger) == []
        assert len(validate_conditions(nsgdm_schedule("bg0", 1000, 1.5), ledger)) == 1

    def test_estimator_alpha_conditions_with_default_lambda(self):
        ledger = derived_constants(0.5, 1.0, 1.0)
        s = nstorm_schedule("expected_sym_alpha", 0.5, 10001, 1.0, 1.0, G=0.5)
        lam = default_lambda0(1.0, 1.0, ledger)
        assert validate_conditions(s, ledger, lambda0=lam) == []
        assert len(validate_conditions(s, ledger, lambda0=1.1 * lam)) == 1
        assert len(validate_conditions(s, ledger, lambda0=100.0 * lam)) == 2

    def test_estimator_alpha_accepts_plain_constants(self):
        s = nstorm_schedule("expected_sym_alpha", 0.5, 10001, 1.0, 1.0, G=0.5)
        lam = default_lambda0(1.0, 1.0, derived_constants(0.5, 1.0, 1.0))
        assert validate_conditions(s, (1.0, 1.0), lambda0=lam) == []

    def test_estimator_sym_one_limit(self):
        limit = 1.0 / (16.0 * math.sqrt(2.0 * math.exp(0.75)))
        ok = nstorm_schedule("expected_sym_one", None, 1000, 0.9 * limit)
        bad = nstorm_schedule("expected_sym_one", None, 1000, 1.5 * limit)
        assert validate_conditions(ok, (1.0, 1.0)) == []
        assert len(validate_conditions(bad, (1.0, 1.0))) == 1

    def test_mss_and_bounded_variance_are_unconditioned(self):
        assert validate_conditions(nstorm_schedule("mss", None, 100, 50.0, G=1.0), (1.0, 1.0)) == []
        assert validate_conditions(
            nstorm_schedule("bounded_variance", None, 100, 50.0, 1.0), (1.0, 1.0)
        ) == []

    def test_untuned_method_has_no_conditions(self):
        raw = Schedule(method="normalized_gd", regime="deterministic", T=10, gamma=0.1, eta=1.0)
        assert validate_conditions(raw, (1.0, 1.0)) == []
