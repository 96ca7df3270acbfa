import math

import numpy as np
import pytest

from wavelab.damping import DampingSpec
from wavelab.gronwall import (SampledDecayFn, bootstrap_exponents, check_decay_inequality,
                              check_weighted_decay_inequality, check_three_term_inequality)
from wavelab.weights import build_weight_family


def power_fn(gamma, t_max=60.0, n=6001):
    t = np.linspace(0.0, t_max, n)
    return SampledDecayFn(t, (1.0 + t) ** -gamma, tail=("power", gamma))


class TestSampledDecayFn:
    def test_rejects_increasing(self):
        t = np.linspace(0, 1, 10)
        with pytest.raises(ValueError):
            SampledDecayFn(t, t.copy())

    def test_rejects_negative(self):
        t = np.linspace(0, 1, 10)
        with pytest.raises(ValueError):
            SampledDecayFn(t, -np.ones(10))

    def test_tail_integral_power(self):
        fn = power_fn(2.0, t_max=10.0)
        # integral_{10}^inf (1+tau)^-4 = 11^-3 / 3
        assert fn.tail_integral(2.0) == pytest.approx(11.0**-3 / 3.0, rel=1e-12)

    def test_tail_integral_exp(self):
        t = np.linspace(0, 5, 100)
        fn = SampledDecayFn(t, np.exp(-t), tail=("exp", 1.0))
        assert fn.tail_integral(2.0) == pytest.approx(np.exp(-10.0) / 2.0, rel=1e-12)

    def test_right_integrals_match_analytic(self):
        fn = power_fn(2.0)  # grid step 0.01 -> trapezoid error ~ h^2/3
        R = fn.right_integrals(2.0)
        exact = (1.0 + fn.t) ** -3 / 3.0
        assert np.max(np.abs(R - exact) / exact) <= 2e-4
        fine = power_fn(2.0, n=60001)
        Rf = fine.right_integrals(2.0)
        exact_f = (1.0 + fine.t) ** -3 / 3.0
        assert np.max(np.abs(Rf - exact_f) / exact_f) <= 2e-6  # second order

    def test_divergent_tail_guard(self):
        fn = power_fn(2.0)
        with pytest.raises(ValueError):
            fn.tail_integral(0.4)


class TestDecayInequality:
    def test_analytic_power_law(self):
        # f = (1+t)^-2 satisfies the hypothesis with c = 1/3 and saturates the
        # claimed decay (fitted constant 1)
        res = check_decay_inequality(power_fn(2.0), sigma=1.0, sigma_prime=1.0,
                                c=1.0 / 3.0 + 1e-9)
        assert res.hypothesis_holds
        assert res.conclusion_exponent == pytest.approx(2.0)
        assert res.fitted_constant == pytest.approx(1.0, rel=1e-12)

    def test_zero_function(self):
        t = np.linspace(0, 10, 100)
        res = check_decay_inequality(SampledDecayFn(t, np.zeros(100)), 1.0, 1.0, 1.0)
        assert res.hypothesis_holds and res.fitted_constant == 0.0

    def test_exponential_beats_any_power(self):
        t = np.linspace(0, 40, 4001)
        fn = SampledDecayFn(t, np.exp(-t), tail=("exp", 1.0))
        res = check_decay_inequality(fn, sigma=1.0, sigma_prime=1.0, c=1.0)
        assert res.hypothesis_holds
        assert math.isfinite(res.fitted_constant)

    def test_too_small_c_reports_violation(self):
        res = check_decay_inequality(power_fn(2.0), sigma=1.0, sigma_prime=1.0, c=1e-3)
        assert not res.hypothesis_holds
        assert res.first_violation_t is not None

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            check_decay_inequality(power_fn(2.0), sigma=0.0, sigma_prime=1.0, c=1.0)


class TestWeightedDecayInequality:
    def test_identity_weight_reduces_to_plain_checker(self):
        fn = power_fn(2.0)
        a = check_decay_inequality(fn, 1.0, 1.0, 0.4)
        b = check_weighted_decay_inequality(fn, lambda t: t, 1.0, 1.0, 0.4)
        assert a.hypothesis_holds == b.hypothesis_holds
        assert a.fitted_constant == pytest.approx(b.fitted_constant, rel=1e-14)

    def test_synthetic_weighted_decay(self):
        # E = (1 + phi(t))^-2 with the strength-1 weight of cubic damping
        fam = build_weight_family(1, 1.0, DampingSpec.polynomial(3.0))
        t = np.linspace(0.0, min(fam.t_max * 0.5, 2e4), 8001)
        phi_t = np.asarray(fam.phi(t))
        E = (1.0 + phi_t) ** -2.0
        fn = SampledDecayFn(t, E, tail=("power", 2.0))
        res = check_weighted_decay_inequality(fn, fam.phi, 1.0, 1.0, 1.0 / 3.0 + 1e-6)
        assert res.hypothesis_holds
        assert res.fitted_constant == pytest.approx(1.0, rel=1e-9)

    def test_zero_function(self):
        t = np.linspace(0, 10, 101)
        res = check_weighted_decay_inequality(SampledDecayFn(t, np.zeros(101)), lambda t: t,
                                1.0, 1.0, 1.0)
        assert res.hypothesis_holds and res.fitted_constant == 0.0


class TestThreeTermInequality:
    def test_positive_instance(self):
        # f = (1+t)^-p: all three hypothesis terms decay no slower than the
        # left side, and the weighted series is bounded
        fn = power_fn(3.0)
        res = check_three_term_inequality(fn, p=3.0, c=0.5)
        assert res.hypothesis_holds
        assert res.conclusion_bounded
        assert res.fitted_constant == pytest.approx(1.0, rel=1e-10)

    def test_zero_function(self):
        t = np.linspace(0, 10, 101)
        res = check_three_term_inequality(SampledDecayFn(t, np.zeros(101)), p=3.0, c=1.0)
        assert res.hypothesis_holds

    def test_negative_control(self):
        # too slow for p = 4: fails the hypothesis AND the bounded conclusion
        fn = power_fn(2.0)
        res = check_three_term_inequality(fn, p=4.0, c=10.0)
        assert not res.hypothesis_holds
        assert not res.conclusion_bounded

    def test_needs_p_above_two(self):
        with pytest.raises(ValueError):
            check_three_term_inequality(power_fn(3.0), p=2.0, c=1.0)

    def test_soundness_spot_checks(self):
        # several profiles violating the conclusion also violate the hypothesis
        cases = [(0.8, 3.0), (1.0, 3.0), (1.5, 4.0), (2.0, 4.0), (2.5, 6.0)]
        for gamma, p in cases:
            fn = power_fn(gamma, t_max=200.0, n=20001)
            res = check_three_term_inequality(fn, p=p, c=10.0)
            assert not res.hypothesis_holds


class TestVerdictJson:
    def test_write_json(self, tmp_path):
        import json

        res = check_decay_inequality(power_fn(2.0), 1.0, 1.0, 0.4)
        res.write_json(tmp_path / "v.json")
        data = json.loads((tmp_path / "v.json").read_text())
        assert data["hypothesis_holds"] is True
        assert data["conclusion_exponent"] == 2.0

    def test_infinite_constant_serialized_as_null(self, tmp_path):
        import json

        res = check_decay_inequality(power_fn(2.0), 1.0, 1.0, 1e-6)
        res.write_json(tmp_path / "v.json")
        data = json.loads((tmp_path / "v.json").read_text())
        assert data["fitted_constant"] is None


class TestBootstrap:
    def test_recursion_values(self):
        out = bootstrap_exponents(4.0, 3, m=1)
        assert np.allclose(out["stages"], [2.0, 3.0, 3.5, 3.75])
        assert out["limit"] == 4.0

    def test_limit_p3_m2(self):
        out = bootstrap_exponents(3.0, 200, m=2)
        assert out["limit"] == 6.0
        assert abs(out["stages"][-1] - 6.0) <= 1e-12

    def test_stage_zero(self):
        out = bootstrap_exponents(5.0, 0, m=1)
        assert out["stages"][0] == 2.0

    def test_fixed_point_grid(self):
        for p in (2.5, 3.0, 4.0, 8.0):
            for m in (1, 2, 3):
                out = bootstrap_exponents(p, 200, m=m)
                assert abs(out["stages"][-1] - m * p) <= 1e-12

    def test_exponent_ordering_fact(self):
        # 1 + 2 theta < p - 1, with gap (p-2)^2 / p
        for p in (2.1, 2.5, 3.0, 4.0, 8.0, 50.0):
            theta = (p - 2.0) / p
            assert 1.0 + 2.0 * theta < p - 1.0
            assert (p - 1.0) - (1.0 + 2.0 * theta) == pytest.approx((p - 2.0) ** 2 / p,
                                                                    rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            bootstrap_exponents(2.0, 10)
