"""Rate regimes, convergence fitting, and the structural inequality checks.

Frozen oracles:
- log regime: eps(10) = ln(10)/10 = 0.23025850929940458
- synthetic errors 3/n fit slope -1 with r^2 = 1
- ln(n)/n on n = 8..1024 fits an apparent slope strictly inside (-1, -0.7)
"""
import math

import numpy as np
import pytest

import gibbsflow as gf
from gibbsflow.analysis import INEQUALITY_SLACK

from conftest import make_rotating


class TestRegimes:
    def test_lipschitz_headline(self):
        regimes = gf.applicable_regimes(0.0, 1.0)
        assert regimes[0].kind is gf.RegimeKind.LIPSCHITZ_LOG
        assert regimes[0].epsilon(10) == pytest.approx(0.23025850929940458, abs=1e-16)

    def test_lipschitz_high_alpha_added(self):
        regimes = gf.applicable_regimes(0.6, 1.0)
        kinds = [r.kind for r in regimes]
        assert kinds == [gf.RegimeKind.LIPSCHITZ_LOG,
                         gf.RegimeKind.LIPSCHITZ_HIGH_ALPHA]
        assert regimes[1].epsilon(16) == pytest.approx(16.0 ** -0.4, rel=1e-14)

    def test_hoelder_dominated(self):
        # beta > 2 alpha - 1 > 0
        regimes = gf.applicable_regimes(0.6, 0.5)
        assert regimes[0].kind is gf.RegimeKind.HOELDER_DOMINATED
        assert regimes[0].epsilon(9) == pytest.approx(9.0 ** -0.5, rel=1e-14)
        assert [r.kind for r in regimes] == [gf.RegimeKind.HOELDER_DOMINATED]

    def test_general_gap(self):
        regimes = gf.applicable_regimes(0.2, 0.5)
        assert regimes[0].kind is gf.RegimeKind.GENERAL_GAP
        assert regimes[0].epsilon(8) == pytest.approx(8.0 ** -0.3, rel=1e-14)

    def test_no_known_rate(self):
        with pytest.raises(gf.NoKnownRateError):
            gf.select_regime(0.9, 0.5)
        assert gf.applicable_regimes(0.9, 0.5) == ()

    def test_log_rate_needs_n_at_least_two(self):
        regime = gf.select_regime(0.0, 1.0)
        with pytest.raises(gf.ValidationError):
            regime.epsilon(1)

    def test_log_rate_not_monotone_below_three(self):
        # ln(2)/2 < ln(3)/3: the guarantee is not a strictly decreasing
        # envelope until n >= 3
        regime = gf.select_regime(0.0, 1.0)
        assert regime.epsilon(2) < regime.epsilon(3)
        values = [regime.epsilon(n) for n in range(3, 50)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_parameter_validation(self):
        with pytest.raises(gf.ValidationError):
            gf.applicable_regimes(1.0, 1.0)
        with pytest.raises(gf.ValidationError):
            gf.applicable_regimes(0.0, 0.0)


class TestFitRate:
    def test_pure_power_law(self):
        ns = [8, 16, 32, 64, 128]
        fit = gf.fit_rate(ns, [3.0 / n for n in ns])
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)

    def test_log_over_n_has_shallower_apparent_slope(self):
        ns = [2 ** k for k in range(3, 11)]
        fit = gf.fit_rate(ns, [0.7 * math.log(n) / n for n in ns])
        assert -1.0 < fit.slope < -0.7

    def test_requires_three_positive_errors(self):
        with pytest.raises(gf.ValidationError):
            gf.fit_rate([8, 16], [0.1, 0.05])
        with pytest.raises(gf.ValidationError):
            gf.fit_rate([8, 16, 32], [0.1, 0.0, 0.01])


class TestRunConvergence:
    def test_scalar_left_slope_and_regime(self, scalar_linear):
        report = gf.run_convergence(scalar_linear, gf.Scheme.LEFT, 0.0, 1.0,
                                    [8, 16, 32, 64, 128])
        assert report.regime.kind is gf.RegimeKind.LIPSCHITZ_LOG
        assert -1.1 < report.fitted_slope < -0.9
        assert report.bound_satisfied
        assert not report.exact_reproduction
        assert report.oracle == "exact"
        # operator norm never exceeds trace norm
        for op, tr in zip(report.err_op, report.err_tr):
            assert op <= tr * (1 + 1e-12) + 1e-15

    def test_exact_reproduction_flagged(self):
        # A and B constant and commuting: every ordering reproduces the
        # propagator to rounding, which is flagged instead of rate-fitted
        model = gf.commuting_model([1.0, 2.0], [0.3, 0.5], gf.constant_profile(1.0))
        report = gf.run_convergence(model, gf.Scheme.SYMMETRIC, 0.0, 1.0,
                                    [4, 8, 16])
        assert report.exact_reproduction
        assert math.isnan(report.fitted_slope)
        assert any("rounding" in note for note in report.notes)

    def test_errors_decrease(self, commuting_linear):
        report = gf.run_convergence(commuting_linear, gf.Scheme.SYMMETRIC,
                                    0.0, 1.0, [8, 16, 32, 64])
        assert all(a > b for a, b in zip(report.err_tr, report.err_tr[1:]))

    def test_explicit_fit_ns(self, scalar_linear):
        report = gf.run_convergence(scalar_linear, gf.Scheme.LEFT, 0.0, 1.0,
                                    [8, 16, 32, 64, 128], fit_ns=[8, 16])
        headline = report.regime_results[0]
        assert headline.train_ns == (8, 16)
        assert headline.test_ns == (32, 64, 128)

    def test_fit_ns_must_be_subset(self, scalar_linear):
        with pytest.raises(gf.ValidationError):
            gf.run_convergence(scalar_linear, gf.Scheme.LEFT, 0.0, 1.0,
                               [8, 16, 32], fit_ns=[12])

    def test_n_list_validation(self, scalar_linear):
        with pytest.raises(gf.ValidationError):
            gf.run_convergence(scalar_linear, gf.Scheme.LEFT, 0.0, 1.0, [8, 16])
        with pytest.raises(gf.ValidationError):
            gf.run_convergence(scalar_linear, gf.Scheme.LEFT, 0.0, 1.0,
                               [16, 8, 32])

    def test_no_regime_reported_when_none_applies(self):
        model = gf.scalar_model(1.0, gf.kink_profile(0.5, 0.5), beta=0.5, alpha=0.9)
        report = gf.run_convergence(model, gf.Scheme.LEFT, 0.0, 1.0, [8, 16, 32])
        assert report.regime is None
        assert report.regime_results == ()
        assert report.bound_satisfied is None
        assert any("no known" in note for note in report.notes)


class TestLemma21:
    def test_hand_instance(self):
        # V_1 e^{-t_1 A} with V_1 = I/2, A = diag(1, 2), t_1 = 1:
        # lhs = (1/2) ||e^{-A}||_1, rhs = (1/2) ||e^{-A/4}||_1; holds strictly
        gen = gf.Generator(np.diag([1.0, 2.0]))
        check = gf.verify_lemma21(gen, [0.5 * np.eye(2)], [1.0])
        lhs = 0.5 * (math.exp(-1.0) + math.exp(-2.0))
        rhs = 0.5 * (math.exp(-0.25) + math.exp(-0.5))
        assert check.lhs == pytest.approx(lhs, rel=1e-12)
        assert check.rhs == pytest.approx(rhs, rel=1e-12)
        assert check.holds

    def test_homogeneous_in_factor_size(self):
        # both sides scale linearly with each factor, so expanding factors
        # are admissible and preserve the bound
        gen = gf.Generator(np.diag([1.0, 3.0]))
        small = gf.verify_lemma21(gen, [0.5 * np.eye(2)], [1.0])
        big = gf.verify_lemma21(gen, [5.0 * np.eye(2)], [1.0])
        assert big.lhs == pytest.approx(10.0 * small.lhs, rel=1e-12)
        assert big.rhs == pytest.approx(10.0 * small.rhs, rel=1e-12)
        assert big.holds

    def test_time_validation(self):
        gen = gf.Generator(np.eye(2))
        with pytest.raises(gf.ValidationError):
            gf.verify_lemma21(gen, [np.eye(2)], [-1.0])
        with pytest.raises(gf.ValidationError):
            gf.verify_lemma21(gen, [], [])

    def test_ensemble_holds(self):
        ensemble = gf.lemma21_ensemble(count=120, seed=7, dim_max=10)
        assert ensemble.holds == ensemble.count
        assert ensemble.min_margin >= -1e-10

    def test_ensemble_deterministic(self):
        a = gf.lemma21_ensemble(count=40, seed=3)
        b = gf.lemma21_ensemble(count=40, seed=3)
        assert a == b


class TestLifting:
    @pytest.mark.parametrize("scheme", [gf.Scheme.LEFT, gf.Scheme.SYMMETRIC])
    @pytest.mark.parametrize("n", [4, 8])
    def test_holds_on_commuting(self, commuting_linear, scheme, n):
        check = gf.verify_lifting(commuting_linear, scheme, 0.0, 1.0, n)
        assert check.holds
        assert check.k_n == n // 2
        assert check.rhs >= check.lhs - INEQUALITY_SLACK

    def test_holds_on_rotating(self, rotating_small):
        check = gf.verify_lifting(rotating_small, gf.Scheme.SYMMETRIC,
                                  0.0, 1.0, 8, tol_ref=1e-8)
        assert check.holds

    def test_requires_even_n(self, commuting_linear):
        with pytest.raises(gf.ValidationError):
            gf.verify_lifting(commuting_linear, gf.Scheme.LEFT, 0.0, 1.0, 5)
        with pytest.raises(gf.ValidationError):
            gf.verify_lifting(commuting_linear, gf.Scheme.LEFT, 0.0, 1.0, 2)


class TestCocycle:
    def test_scalar(self, scalar_linear):
        check = gf.verify_cocycle(scalar_linear, 0.0, 0.5, 1.0, tol_ref=1e-10)
        assert check.residual <= check.budget
        assert check.contraction_ok
        assert check.holds

    def test_ordering_validation(self, scalar_linear):
        with pytest.raises(gf.ValidationError):
            gf.verify_cocycle(scalar_linear, 0.0, 1.0, 0.5)


class TestContractionCheck:
    def test_all_schemes(self, commuting_small):
        for scheme in gf.Scheme:
            check = gf.verify_contraction(commuting_small, scheme, 0.0, 1.0, 16)
            assert check.holds
            assert check.norm <= math.exp(-1.0) + 1e-10
