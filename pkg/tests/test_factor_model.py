import math

import numpy as np
import pytest
from scipy import integrate, stats

from fwerkit import distributions as dd
from fwerkit.errors import DomainError
from fwerkit.factor_model import (
    EquicorrelatedModel,
    MarginalLaw,
    NullConfiguration,
    model_from_json,
)

from _oracles import SPOT


def law_for(rho, f_spec, g_spec, n=10):
    return MarginalLaw(EquicorrelatedModel.global_null(rho, f_spec, g_spec, n))


def simpson_marginal(stat, rho, v, g_dist, f_dist, half_width, points):
    """Dense-grid Simpson oracle, independent of the adaptive engine."""
    u = np.linspace(-half_width, half_width, points)
    y = (v - math.sqrt(rho) * u) / math.sqrt(1.0 - rho)
    g = g_dist.pdf(u)
    if stat == "pdf":
        vals = f_dist.pdf(y) * g / math.sqrt(1.0 - rho)
    elif stat == "cdf":
        vals = f_dist.cdf(y) * g
    else:
        vals = f_dist.survival(y) * g
    return integrate.simpson(vals, x=u)


class TestConfiguration:
    def test_global_null(self):
        cfg = NullConfiguration.global_null(4)
        assert cfg.n_true == 4 and cfg.is_global_null
        assert cfg.true_null_indices == (0, 1, 2, 3)

    def test_mixed(self):
        cfg = NullConfiguration(3, (0.0, 2.0, 0.0))
        assert cfg.n_true == 2 and cfg.mu_max == 2.0
        assert cfg.true_null_indices == (0, 2)

    def test_negative_mean_rejected(self):
        with pytest.raises(DomainError):
            NullConfiguration(2, (0.0, -1.0))

    def test_rho_one_rejected(self):
        with pytest.raises(DomainError, match="rho"):
            EquicorrelatedModel.global_null(1.0, dd.standard_normal(),
                                            dd.laplace(), 5)


class TestModelJson:
    def test_round_trip(self):
        m = EquicorrelatedModel(
            rho=0.3, f_spec=dd.standard_normal(), g_spec=dd.laplace(),
            config=NullConfiguration(3, (0.0, 1.0, 0.0)),
        )
        assert model_from_json(m.to_json()) == m

    def test_global_null_shorthand(self):
        m = model_from_json({
            "rho": 0.2, "f": {"kind": "standard_normal"},
            "g": {"kind": "laplace"}, "n": 1000, "global_null": True,
        })
        assert m.config.n == 1000 and m.config.is_global_null

    def test_unknown_key_rejected(self):
        with pytest.raises(DomainError):
            model_from_json({
                "rho": 0.2, "f": {"kind": "laplace"},
                "g": {"kind": "laplace"}, "n": 5, "global_null": True,
                "sigma": [[1.0]],
            })


class TestDegenerateFactor:
    def test_rho_zero_is_f_exactly(self):
        law = law_for(0.0, dd.laplace(), dd.standard_normal())
        f = dd.make_distribution(dd.laplace())
        for v in (-3.0, 0.0, 0.4, 6.0):
            assert law.cdf(v) == f.cdf(v)
            assert law.pdf(v) == f.pdf(v)
            assert law.log_survival(v) == f.log_survival(v)

    def test_rho_zero_normal_tail_value(self):
        law = law_for(0.0, dd.standard_normal(), dd.laplace())
        assert law.log_survival(0.0) == pytest.approx(math.log(0.5),
                                                      rel=1e-15)
        assert law.log_survival(6.0) == pytest.approx(SPOT["normal_logsf_6"],
                                                      rel=1e-13)


class TestGaussianClosure:
    @pytest.mark.parametrize("rho", [0.1, 0.3, 0.5, 0.9, 0.99])
    def test_marginal_is_standard_normal(self, rho):
        law = law_for(rho, dd.standard_normal(), dd.standard_normal())
        for v in (-4.0, -1.0, 0.0, 0.7, 2.5, 5.0):
            assert law.cdf(v) == pytest.approx(stats.norm.cdf(v), abs=1e-10)
        assert law.log_survival(8.0) == pytest.approx(stats.norm.logsf(8.0),
                                                      rel=1e-10)
        assert law.pdf(1.3) == pytest.approx(stats.norm.pdf(1.3), rel=1e-10)


class TestAgainstDenseGrid:
    def test_pdf_normal_laplace(self):
        law = law_for(0.5, dd.standard_normal(), dd.laplace())
        got = law.pdf(2.0)
        oracle = simpson_marginal("pdf", 0.5, 2.0, law.g, law.f, 40.0,
                                  1_000_001)
        assert got == pytest.approx(oracle, rel=1e-9)
        assert got == pytest.approx(SPOT["pdf_norm_lap_r05_v2"], rel=1e-12)

    def test_cdf_normal_t4(self):
        law = law_for(0.1, dd.standard_normal(), dd.scaled_student_t(4.0))
        got = law.cdf(3.0)
        # polynomial g tails need a wide grid: truncation above 2e4
        # contributes ~ S_t4(2e4 sqrt 2) ~ 5e-18
        oracle = simpson_marginal("cdf", 0.1, 3.0, law.g, law.f, 2e4,
                                  4_000_001)
        assert got == pytest.approx(oracle, rel=1e-9)
        assert got == pytest.approx(SPOT["cdf_norm_t4_r01_v3"], rel=1e-12)

    def test_log_survival_deep(self):
        law = law_for(0.2, dd.standard_normal(), dd.laplace())
        assert law.log_survival(8.0) == pytest.approx(
            SPOT["logsf_norm_lap_r02_v8"], rel=1e-12)

    def test_log_survival_stays_finite_very_deep(self):
        # normal (x) normal at v = 36: survival ~ 3e-284
        law = law_for(0.5, dd.standard_normal(), dd.standard_normal())
        got = law.log_survival(36.0)
        assert np.isfinite(got)
        assert got == pytest.approx(stats.norm.logsf(36.0), rel=1e-10)


class TestCutoff:
    def test_independent_normal(self):
        law = law_for(0.0, dd.standard_normal(), dd.laplace())
        assert law.bonferroni_cutoff(100, 0.05) == pytest.approx(
            SPOT["normal_q_09995"], abs=1e-12)

    def test_single_test_median(self):
        law = law_for(0.0, dd.laplace(), dd.standard_normal())
        assert law.bonferroni_cutoff(1, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_convolved_cutoff_oracle(self):
        law = law_for(0.2, dd.standard_normal(), dd.laplace())
        c = law.bonferroni_cutoff(1000, 0.05)
        assert c == pytest.approx(SPOT["cutoff_norm_lap_r02_n1000"],
                                  abs=1e-11)

    def test_survival_at_cutoff_within_contract(self):
        law = law_for(0.3, dd.standard_normal(), dd.scaled_student_t(4.0))
        for n in (1, 100, 10**4, 10**6, 10**7):
            c = law.bonferroni_cutoff(n, 0.05)
            target = 0.05 / n
            achieved = math.exp(law.log_survival(c))
            # contract is 1e-3 relative on the survival scale; the solver
            # actually lands many orders tighter
            assert abs(achieved - target) <= 1e-3 * target
            assert abs(achieved - target) <= 1e-9 * target

    def test_round_trip_cdf_at_cutoff(self):
        law = law_for(0.2, dd.standard_normal(), dd.laplace())
        for n in (1, 100, 10**4, 10**6, 10**7):
            c = law.bonferroni_cutoff(n, 0.05)
            assert abs(law.cdf(c) - (1.0 - 0.05 / n)) <= 1e-3 * 0.05 / n

    def test_monotone_in_n_and_alpha(self):
        law = law_for(0.4, dd.standard_normal(), dd.laplace())
        cs = [law.bonferroni_cutoff(n, 0.05) for n in (10, 100, 1000, 10**5)]
        assert all(b > a for a, b in zip(cs[:-1], cs[1:]))
        by_alpha = [law.bonferroni_cutoff(100, a) for a in (0.01, 0.05, 0.2)]
        assert all(b < a for a, b in zip(by_alpha[:-1], by_alpha[1:]))

    def test_domain_errors(self):
        law = law_for(0.2, dd.standard_normal(), dd.laplace())
        with pytest.raises(DomainError):
            law.bonferroni_cutoff(0, 0.05)
        with pytest.raises(DomainError):
            law.bonferroni_cutoff(10, 1.5)
        with pytest.raises(DomainError):
            law.quantile(0.0)


class TestNearComonotone:
    def test_marginal_approaches_g(self):
        # at rho near 1 the shared factor dominates
        law = law_for(1.0 - 1e-9, dd.standard_normal(), dd.laplace())
        g = dd.make_distribution(dd.laplace())
        for v in (-2.0, 0.5, 3.0):
            assert law.cdf(v) == pytest.approx(g.cdf(v), abs=2e-5)

    def test_marginal_cdf_monotone(self):
        law = law_for(0.7, dd.standard_normal(), dd.scaled_student_t(4.0))
        vs = np.linspace(-6.0, 6.0, 41)
        cdfs = [law.cdf(v) for v in vs]
        assert all(b >= a - 1e-12 for a, b in zip(cdfs[:-1], cdfs[1:]))

    def test_marginal_variance_one(self):
        law = law_for(0.35, dd.standard_normal(), dd.laplace())
        var, _ = integrate.quad(lambda v: v * v * law.pdf(v), -40, 40,
                                limit=200)
        assert var == pytest.approx(1.0, abs=1e-8)
