import math

import numpy as np
import pytest

from fwerkit import distributions as dd
from fwerkit.errors import ConfigurationError, DomainError
from fwerkit.factor_model import EquicorrelatedModel, NullConfiguration
from fwerkit import fwer_analytics as fa

from _oracles import SPOT, TABLE1, TABLE2

NORMAL = dd.standard_normal()
LAPLACE = dd.laplace()
T4 = dd.scaled_student_t(4.0)
PARETO1 = dd.standardized_pareto(1.0)
GN25 = dd.generalized_normal(2.5)


def global_null(rho, f, g, n):
    return EquicorrelatedModel.global_null(rho, f, g, n)


class TestExactFwer:
    def test_independent_closed_form(self):
        m = global_null(0.0, NORMAL, LAPLACE, 100)
        expected = -math.expm1(100 * math.log1p(-0.0005))
        assert fa.exact_fwer_bonferroni(m, 0.05) == expected

    def test_reference_cells_normal_laplace(self):
        m = global_null(0.2, NORMAL, LAPLACE, 100)
        v = fa.exact_fwer_bonferroni(m, 0.05)
        assert v == pytest.approx(TABLE1[(0.2, 100)], abs=1e-10)
        assert v == pytest.approx(0.029444, abs=5e-6)

    def test_reference_cells_normal_t4(self):
        m = global_null(0.3, NORMAL, T4, 1000)
        v = fa.exact_fwer_bonferroni(m, 0.05)
        assert v == pytest.approx(TABLE2[(0.3, 1000)], abs=1e-10)
        assert v == pytest.approx(0.000399, abs=5e-7)

    def test_partial_nulls_use_full_n_cutoff(self):
        config = NullConfiguration(100, (0.0,) * 60 + (3.0,) * 40)
        m = EquicorrelatedModel(rho=0.3, f_spec=NORMAL, g_spec=LAPLACE,
                                config=config)
        v = fa.exact_fwer_bonferroni(m, 0.05)
        full = fa.exact_fwer_bonferroni(global_null(0.3, NORMAL, LAPLACE, 100),
                                        0.05)
        # fewer true nulls, same cutoff: error probability can only drop
        assert 0.0 < v < full

    def test_no_true_nulls_raises(self):
        config = NullConfiguration(3, (1.0, 1.0, 2.0))
        m = EquicorrelatedModel(rho=0.3, f_spec=NORMAL, g_spec=LAPLACE,
                                config=config)
        with pytest.raises(ConfigurationError):
            fa.exact_fwer_bonferroni(m, 0.05)


class TestAnyRejectionHolm:
    def test_equals_fwer_under_global_null(self):
        m = global_null(0.4, NORMAL, LAPLACE, 50)
        a = fa.exact_any_rejection_holm(m, 0.05)
        b = fa.exact_fwer_bonferroni(m, 0.05)
        assert a == pytest.approx(b, abs=1e-10)

    def test_two_shifted_coordinates_oracle(self):
        config = NullConfiguration(10, (1.0, 1.0) + (0.0,) * 8)
        m = EquicorrelatedModel(rho=0.5, f_spec=NORMAL, g_spec=NORMAL,
                                config=config)
        v = fa.exact_any_rejection_holm(m, 0.05)
        assert v == pytest.approx(SPOT["any_rej_norm_norm_r05_n10_mu1x2"],
                                  abs=1e-10)

    def test_single_test_is_alpha(self):
        m = global_null(0.0, NORMAL, NORMAL, 1)
        assert fa.exact_any_rejection_holm(m, 0.05) == pytest.approx(
            0.05, abs=1e-12)


class TestAnyPwr:
    def test_huge_shift_saturates(self):
        config = NullConfiguration(20, (50.0,) * 10 + (0.0,) * 10)
        m = EquicorrelatedModel(rho=0.3, f_spec=NORMAL, g_spec=NORMAL,
                                config=config)
        assert fa.anypwr_single_step(m, 0.05) >= 1.0 - 1e-9

    def test_shift_at_cutoff_gives_half(self):
        from fwerkit.factor_model import MarginalLaw
        law = MarginalLaw(global_null(0.0, NORMAL, NORMAL, 1))
        c = law.bonferroni_cutoff(1, 0.05)
        config = NullConfiguration(1, (c,))
        m = EquicorrelatedModel(rho=0.0, f_spec=NORMAL, g_spec=NORMAL,
                                config=config)
        assert fa.anypwr_single_step(m, 0.05) == pytest.approx(0.5,
                                                               abs=1e-12)

    def test_ten_shifted_of_hundred_oracle(self):
        config = NullConfiguration(100, (2.0,) * 10 + (0.0,) * 90)
        m = EquicorrelatedModel(rho=0.3, f_spec=NORMAL, g_spec=NORMAL,
                                config=config)
        v = fa.anypwr_single_step(m, 0.05)
        assert v == pytest.approx(SPOT["anypwr_norm_norm_r03_n100_mu2x10"],
                                  abs=1e-10)

    def test_all_nulls_raises(self):
        m = global_null(0.3, NORMAL, NORMAL, 5)
        with pytest.raises(ConfigurationError):
            fa.anypwr_single_step(m, 0.05)


class TestBounds:
    def test_upper_fixed_d_oracle(self):
        m = global_null(0.5, NORMAL, NORMAL, 100)
        v, d = fa.fwer_upper_bound(m, 0.05, d=0.9)
        assert d == 0.9
        assert v == pytest.approx(SPOT["upper_norm_norm_r05_n100_d09"],
                                  abs=1e-10)
        assert v >= fa.exact_fwer_bonferroni(m, 0.05)

    def test_upper_at_d_near_one(self):
        # the second bracket collapses, leaving 1 - G(0) F^n(c t)
        m = global_null(0.5, NORMAL, LAPLACE, 100)
        from fwerkit.factor_model import MarginalLaw
        law = MarginalLaw(m)
        c = law.bonferroni_cutoff(100, 0.05)
        t = 1.0 / math.sqrt(0.5)
        limit = 1.0 - 0.5 * math.exp(100 * float(law.f.log_cdf(c * t)))
        v, _ = fa.fwer_upper_bound(m, 0.05, d=1.0 - 1e-12)
        assert v == pytest.approx(limit, abs=1e-9)

    def test_lower_oracle(self):
        m = global_null(0.5, NORMAL, NORMAL, 100)
        assert fa.fwer_lower_bound(m, 0.05) == pytest.approx(
            SPOT["lower_norm_norm_r05_n100"], rel=1e-9)

    def test_lower_single_test_below_alpha(self):
        m = global_null(0.3, NORMAL, LAPLACE, 1)
        assert fa.fwer_lower_bound(m, 0.05) <= 0.05

    def test_rho_zero_rejected(self):
        m = global_null(0.0, NORMAL, LAPLACE, 10)
        with pytest.raises(DomainError):
            fa.fwer_upper_bound(m, 0.05, d=0.5)
        with pytest.raises(DomainError):
            fa.fwer_lower_bound(m, 0.05)

    def test_report_sandwich_and_reference_field(self):
        m = global_null(0.3, NORMAL, NORMAL, 1000)
        rep = fa.bound_report(m, 0.05)
        assert rep.lower <= rep.exact <= rep.upper
        assert rep.upper_alpha_one_minus_rho == pytest.approx(0.035)
        payload = rep.to_json()
        assert set(payload) == {
            "exact", "lower", "upper", "d_used",
            "upper_alpha_one_minus_rho", "n", "alpha", "rho",
        }

    def test_optimized_dominates_reference_cell(self):
        m = global_null(0.2, NORMAL, LAPLACE, 100)
        rep = fa.bound_report(m, 0.05)
        assert rep.lower <= 0.029444 <= rep.upper

    def test_report_no_reference_for_non_normal(self):
        m = global_null(0.3, NORMAL, LAPLACE, 100)
        assert fa.bound_report(m, 0.05).upper_alpha_one_minus_rho is None

    @pytest.mark.parametrize("rho", [0.1, 0.5, 0.9])
    def test_sandwich_small_grid(self, rho):
        for f, g in ((NORMAL, LAPLACE), (LAPLACE, T4), (GN25, NORMAL)):
            m = global_null(rho, f, g, 1000)
            rep = fa.bound_report(m, 0.05)
            assert rep.lower <= rep.exact + 2e-9
            assert rep.exact <= rep.upper + 2e-9


class TestParetoFloor:
    def test_unit_scale_constant(self):
        # gamma (1 - rho) = 1
        assert fa.pareto_limit_floor(1.0, 2.0, 0.5) == pytest.approx(
            SPOT["floor_delta1_gr1"], rel=1e-14)

    def test_half_scale_constant(self):
        assert fa.pareto_limit_floor(1.0, 1.0, 0.5) == pytest.approx(
            SPOT["floor_delta1_gr05"], rel=1e-14)

    def test_matches_finite_n_power_limit(self):
        # (1 - d / n^{1 + delta/2})^(n^{1 + delta/2}) -> exp(-d) at n = 1e8
        eta = math.sqrt(1.0 / 3.0) * 2.0
        d = eta ** 3
        n15 = 1e8 ** 1.5
        finite = math.exp(n15 * math.log1p(-d / n15))
        assert fa.pareto_limit_floor(1.0, 2.0, 0.5) == pytest.approx(
            finite, rel=1e-7)

    def test_vanishes_for_large_delta(self):
        vals = [fa.pareto_limit_floor(dlt, 1.0 / (1.0 - 0.5), 0.5)
                for dlt in (1.0, 4.0, 16.0, 50.0)]
        assert all(b < a for a, b in zip(vals[:-1], vals[1:]))
        assert vals[-1] < 1e-30

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            fa.pareto_limit_floor(0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            fa.pareto_limit_floor(1.0, -1.0, 0.5)
        with pytest.raises(DomainError):
            fa.pareto_limit_floor(1.0, 1.0, 0.0)


class TestParetoLowerBound:
    @pytest.mark.parametrize("n,key", [
        (10**4, "pareto_lower_r05_n1e4"),
        (10**6, "pareto_lower_r05_n1e6"),
    ])
    def test_matches_oracle_and_stays_positive(self, n, key):
        m = global_null(0.5, PARETO1, NORMAL, n)
        lb = fa.fwer_lower_bound(m, 0.05)
        assert lb == pytest.approx(SPOT[key], rel=1e-8)
        assert lb > 0.02


class TestConditions:
    def test_normal_satisfies_both(self):
        rep = fa.check_zero_limit_conditions(NORMAL, LAPLACE)
        assert rep.condition_i_verdict == "satisfied"
        assert rep.condition_ii_verdict == "satisfied"
        # closed-form ratio exp(-b x + b^2 / 2) at x = 40, b = 1
        assert rep.ratio_table[1.0][40.0] == pytest.approx(
            math.exp(-40.0 + 0.5), rel=1e-9)

    def test_pareto_violates_density_shape(self):
        rep = fa.check_zero_limit_conditions(PARETO1, NORMAL)
        assert rep.condition_ii_verdict == "violated"
        assert not rep.density_nonincreasing

    def test_laplace_flat_ratio_violates(self):
        rep = fa.check_zero_limit_conditions(LAPLACE, NORMAL)
        assert rep.condition_ii_verdict == "violated"
        assert rep.density_nonincreasing

    def test_t4_factor_violates(self):
        rep = fa.check_zero_limit_conditions(T4, NORMAL)
        assert rep.condition_ii_verdict == "violated"

    def test_slow_decay_is_inconclusive(self):
        rep = fa.check_zero_limit_conditions(dd.generalized_normal(1.2),
                                             NORMAL)
        assert rep.condition_ii_verdict == "inconclusive"

    def test_t4_shared_factor_has_tail_mass(self):
        rep = fa.check_zero_limit_conditions(NORMAL, T4, a_grid=(1.0,))
        assert rep.condition_i_verdict == "satisfied"
        assert rep.condition_i_max_tail > 0.0

    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            fa.check_zero_limit_conditions(NORMAL, T4, b_grid=())


class TestLimitDiagnostic:
    def test_normal_laplace_tends_to_zero(self):
        m = global_null(0.5, NORMAL, LAPLACE, 10)
        diag = fa.limit_ratio_diagnostic(m, 0.05,
                                         (100, 1000, 10**4, 10**5, 10**6))
        assert diag.verdict == "tends_to_zero"
        fns = diag.fn_power_values
        assert all(b > a for a, b in zip(fns[:-1], fns[1:]))
        assert fns[-1] > 0.99

    def test_pareto_positive_limit(self):
        m = global_null(0.5, PARETO1, NORMAL, 10)
        diag = fa.limit_ratio_diagnostic(m, 0.05,
                                         (100, 1000, 10**4, 10**5, 10**6))
        assert diag.verdict == "positive_limit"
        # the power settles near exp(-alpha)
        assert diag.fn_power_values[-1] == pytest.approx(math.exp(-0.05),
                                                         abs=1e-3)

    def test_near_independence_recovers_alpha(self):
        m = global_null(1e-6, NORMAL, NORMAL, 10)
        diag = fa.limit_ratio_diagnostic(m, 0.05, (100, 1000, 10**4))
        assert diag.log_limit_estimates[-1] == pytest.approx(-0.05, abs=1e-3)
        assert diag.fn_power_values[-1] == pytest.approx(math.exp(-0.05),
                                                         abs=1e-3)

    def test_grid_validation(self):
        m = global_null(0.5, NORMAL, LAPLACE, 10)
        with pytest.raises(DomainError):
            fa.limit_ratio_diagnostic(m, 0.05, (100, 100))
        with pytest.raises(DomainError):
            fa.limit_ratio_diagnostic(m, 0.05, (100, 10**9))

    def test_serialization_fields(self):
        m = global_null(0.5, NORMAL, LAPLACE, 10)
        diag = fa.limit_ratio_diagnostic(m, 0.05, (100, 1000))
        payload = diag.to_json()
        assert set(payload) == {"n_grid", "ratio_values",
                                "log_limit_estimates", "fn_power_values",
                                "verdict"}


class TestReductionBound:
    def test_equicorrelated_above_delta_keeps_all_rows(self):
        n = 20
        sigma = np.full((n, n), 0.3)
        np.fill_diagonal(sigma, 1.0)
        bound, m = fa.reduction_bound(sigma, 0.2, NORMAL, LAPLACE, n, 0.05)
        assert m == n
        expected = fa.exact_fwer_bonferroni(
            global_null(0.2, NORMAL, LAPLACE, n), 0.05)
        assert bound == pytest.approx(expected, abs=1e-10)

    def test_single_weak_pair_drops_two_rows(self):
        n = 100
        sigma = np.full((n, n), 0.3)
        np.fill_diagonal(sigma, 1.0)
        sigma[0, 1] = sigma[1, 0] = 0.05
        bound, m = fa.reduction_bound(sigma, 0.2, NORMAL, LAPLACE, n, 0.05)
        assert m == 98
        expected = fa.exact_fwer_bonferroni(
            global_null(0.2, NORMAL, LAPLACE, 98), 0.05) + 2 * 0.05 / 100
        assert bound == pytest.approx(expected, abs=1e-10)

    def test_three_by_three_scan(self):
        sigma = np.array([
            [1.0, 0.5, 0.1],
            [0.5, 1.0, 0.5],
            [0.1, 0.5, 1.0],
        ])
        bound, m = fa.reduction_bound(sigma, 0.3, NORMAL, NORMAL, 3, 0.05)
        assert m == 1  # only the middle row clears delta everywhere
        assert bound <= 1.0

    def test_all_rows_excluded(self):
        sigma = np.array([[1.0, 0.0], [0.0, 1.0]])
        bound, m = fa.reduction_bound(sigma, 0.3, NORMAL, NORMAL, 2, 0.05)
        assert m == 0
        assert bound == pytest.approx(0.05)

    def test_invalid_matrix_rejected(self):
        with pytest.raises(DomainError):
            fa.reduction_bound(np.array([[1.0, 0.2], [0.3, 1.0]]), 0.2,
                               NORMAL, NORMAL, 2, 0.05)
        with pytest.raises(DomainError):
            fa.reduction_bound(np.array([[2.0, 0.2], [0.2, 2.0]]), 0.2,
                               NORMAL, NORMAL, 2, 0.05)


class TestQuadrantProbability:
    def test_unbounded_thresholds_give_one(self):
        m = global_null(0.4, NORMAL, LAPLACE, 5)
        assert fa.quadrant_probability(m, [1000.0] * 5) == pytest.approx(
            1.0, abs=1e-12)

    def test_single_median_threshold(self):
        m = global_null(0.4, NORMAL, NORMAL, 1)
        assert fa.quadrant_probability(m, [0.0]) == pytest.approx(0.5,
                                                                  abs=1e-10)

    def test_correlation_monotonicity_with_oracle(self):
        lo = fa.quadrant_probability(global_null(0.2, NORMAL, NORMAL, 5),
                                     [1.0] * 5)
        hi = fa.quadrant_probability(global_null(0.6, NORMAL, NORMAL, 5),
                                     [1.0] * 5)
        assert lo == pytest.approx(SPOT["quadrant_norm_norm_r02_n5_a1"],
                                   abs=1e-10)
        assert hi == pytest.approx(SPOT["quadrant_norm_norm_r06_n5_a1"],
                                   abs=1e-10)
        assert hi >= lo

    def test_unequal_thresholds_and_means(self):
        config = NullConfiguration(3, (0.0, 1.0, 0.0))
        m = EquicorrelatedModel(rho=0.3, f_spec=NORMAL, g_spec=NORMAL,
                                config=config)
        v = fa.quadrant_probability(m, [1.0, 2.0, 0.5])
        assert 0.0 < v < 1.0

    def test_length_mismatch(self):
        m = global_null(0.4, NORMAL, LAPLACE, 5)
        with pytest.raises(DomainError):
            fa.quadrant_probability(m, [1.0] * 4)


class TestStructuralProperties:
    def test_rho_monotone_fwer(self):
        vals = [fa.exact_fwer_bonferroni(global_null(r, NORMAL, LAPLACE, 100),
                                         0.05)
                for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(b <= a + 1e-9 for a, b in zip(vals[:-1], vals[1:]))

    def test_configuration_monotonicity(self):
        # fewer true nulls cannot raise the error probability
        full = fa.exact_fwer_bonferroni(global_null(0.4, NORMAL, LAPLACE, 50),
                                        0.05)
        config = NullConfiguration(50, (0.0,) * 20 + (1.0,) * 30)
        part = fa.exact_fwer_bonferroni(
            EquicorrelatedModel(rho=0.4, f_spec=NORMAL, g_spec=LAPLACE,
                                config=config), 0.05)
        assert part <= full + 1e-12

    def test_normal_reference_bound_is_advisory(self):
        m = global_null(0.3, NORMAL, NORMAL, 10**4)
        v = fa.exact_fwer_bonferroni(m, 0.05)
        assert v <= 0.05 * (1 - 0.3) + 0.002
