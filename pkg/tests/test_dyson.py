"""Perturbation-series terms and certified partial sums.

Frozen oracles for a = 1 scalar problems:
- constant b = c on [s, t] with D = t - s:  S_k = e^{-D} (-cD)^k / k!
- linear b(r) = r:  S_1(0, t) = -e^{-t} t^2 / 2  (integral of r dr)
- commuting diagonal family: S_1(s, t) = -diag(d0) e^{-(t-s) lambda} int_s^t b
"""
import math

import numpy as np
import pytest

import gibbsflow as gf

from conftest import make_rotating


class TestSeriesTerms:
    def test_scalar_constant_b_all_orders(self, scalar_const):
        # S_k(0,1) = e^{-1} (-0.4)^k / k!
        c = 0.4
        for k in range(7):
            term = gf.dyson_phillips_term(scalar_const, 0.0, 1.0, k)
            expected = math.exp(-1.0) * (-c) ** k / math.factorial(k)
            assert term[0, 0] == pytest.approx(expected, abs=1e-13)

    def test_scalar_constant_b_subinterval(self, scalar_const):
        c, s, t = 0.4, 0.25, 0.85
        d = t - s
        for k in range(4):
            term = gf.dyson_phillips_term(scalar_const, s, t, k)
            expected = math.exp(-d) * (-c * d) ** k / math.factorial(k)
            assert term[0, 0] == pytest.approx(expected, abs=1e-13)

    def test_scalar_linear_first_order(self, scalar_linear):
        # S_1(0, t) = -e^{-t} int_0^t r dr = -e^{-t} t^2/2
        for t in (0.5, 1.0):
            term = gf.dyson_phillips_term(scalar_linear, 0.0, t, 1)
            assert term[0, 0] == pytest.approx(-math.exp(-t) * t * t / 2.0, abs=1e-13)

    def test_commuting_first_order(self, commuting_linear):
        # diagonal: S_1 = -d0_i e^{-(t-s) lambda_i} int_s^t b(r) dr
        term = gf.dyson_phillips_term(commuting_linear, 0.0, 1.0, 1)
        expected = np.diag([-2.0 * math.exp(-1.0) * 0.5,
                            -1.0 * math.exp(-3.0) * 0.5])
        assert np.allclose(term, expected, atol=1e-13)

    def test_zeroth_order_is_heat_factor(self, commuting_small):
        term = gf.dyson_phillips_term(commuting_small, 0.0, 1.0, 0)
        assert np.allclose(term, commuting_small.generator.heat(1.0), atol=1e-15)

    def test_term_norm_bound(self, scalar_const):
        # ||S_k||_1 <= xi^k / k!-free bound: xi^k with xi = 0.4
        xi = 0.4
        for k in range(1, 6):
            term = gf.dyson_phillips_term(scalar_const, 0.0, 1.0, k)
            assert gf.trace_norm(term) <= xi ** k + 1e-12

    def test_order_validation(self, scalar_const):
        with pytest.raises(gf.ValidationError):
            gf.dyson_phillips_term(scalar_const, 0.0, 1.0, -1)
        with pytest.raises(gf.ValidationError):
            gf.dyson_phillips_term(scalar_const, 0.0, 1.0, 41)
        with pytest.raises(gf.ValidationError):
            gf.dyson_phillips_term(scalar_const, 1.0, 1.0, 1)


class TestCertifiedSum:
    def test_scalar_constant_matches_exact(self, scalar_const):
        result = gf.dyson_phillips_sum(scalar_const, 0.0, 1.0, 1e-10)
        exact = scalar_const.exact(0.0, 1.0)
        assert abs(result.U[0, 0] - exact[0, 0]) <= result.tail_bound + 1e-9
        assert result.tail_bound <= 1e-10

    def test_commuting_matches_exact(self, commuting_small):
        result = gf.dyson_phillips_sum(commuting_small, 0.0, 1.0, 1e-10)
        err = gf.trace_norm(result.U - commuting_small.exact(0.0, 1.0))
        assert err <= result.tail_bound + 1e-9

    def test_rotating_matches_reference(self):
        model = make_rotating(dim=3, seed=9)
        # short interval keeps xi < 1/2 without bisection
        result = gf.dyson_phillips_sum(model, 0.2, 0.4, 1e-8)
        ref = gf.reference_propagator(model, 0.2, 0.4, 1e-9)
        err = gf.opnorm(result.U - ref.U)
        assert err <= result.tail_bound + 1e-7

    def test_bisection_on_large_interval(self, scalar_linear):
        # xi = 1 on [0, 1] forces composition of subinterval sums
        result = gf.dyson_phillips_sum(scalar_linear, 0.0, 1.0, 1e-10)
        assert abs(result.U[0, 0] - math.exp(-1.5)) <= result.tail_bound + 1e-8
        assert "bisect" in result.method

    def test_eps_tail_validation(self, scalar_const):
        with pytest.raises(gf.ValidationError):
            gf.dyson_phillips_sum(scalar_const, 0.0, 1.0, 0.0)

    def test_unresolvable_coupling_raises_config_error(self):
        # a coupling this large keeps xi >= 1/2 past the bisection depth cap
        model = gf.scalar_model(1.0, gf.constant_profile(1e10))
        with pytest.raises(gf.ConfigError):
            gf.dyson_phillips_sum(model, 0.0, 1.0, 1e-8)

    def test_tail_decreases_with_eps(self, scalar_const):
        tails = [gf.dyson_phillips_sum(scalar_const, 0.0, 1.0, eps).tail_bound
                 for eps in (1e-4, 1e-8, 1e-12)]
        assert tails[0] > tails[1] > tails[2]
        assert tails[2] <= 1e-12
