"""One-factor equicorrelated model and its convolution marginal.

The test statistics are X_i = sqrt(1-rho) Z_i + sqrt(rho) U with Z_i iid
from F and U from G, both unit variance. The marginal law of X_i is the
convolution

    f*(v) = (1 / sqrt(1-rho)) integral f((v - sqrt(rho) u) / sqrt(1-rho)) g(u) du

evaluated here by adaptive Gauss-Kronrod panels over the factor axis. All
tail quantities are carried in log space, so statistic-scale cutoffs remain
exact for hypothesis counts up to 1e7 and beyond (survival targets below
1e-280 are representable).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._roots import solve_decreasing
from .distributions import DistributionSpec, make_distribution, spec_from_json
from .errors import ConfigurationError, DomainError
from .quadrature import integrate_line, integrate_line_log

# survival levels whose preimages seed the quadrature knots
_F_LEVELS = (0.5, 0.2, 0.05, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-12, 1e-16,
             1e-24, 1e-32, 1e-48, 1e-64, 1e-96, 1e-128, 1e-192, 1e-250)
_G_LEVELS = (0.25, 0.1, 1e-2, 1e-4, 1e-6, 1e-8, 1e-12, 1e-16, 1e-24, 1e-32,
             1e-48, 1e-64, 1e-96, 1e-128, 1e-192, 1e-250)


@dataclass(frozen=True)
class NullConfiguration:
    """Hypothesis count and the nonnegative mean vector; mu_i = 0 marks a
    true null."""

    n: int
    means: tuple

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"need at least one hypothesis, got n={self.n}")
        means = tuple(float(m) for m in self.means)
        if len(means) != self.n:
            raise DomainError(
                f"means has length {len(means)}, expected n={self.n}"
            )
        if any(m < 0.0 for m in means):
            raise DomainError("one-sided alternatives require means >= 0")
        object.__setattr__(self, "means", means)

    @classmethod
    def global_null(cls, n):
        return cls(n=n, means=(0.0,) * n)

    @property
    def true_null_indices(self):
        return tuple(i for i, m in enumerate(self.means) if m == 0.0)

    @property
    def n_true(self):
        return sum(1 for m in self.means if m == 0.0)

    @property
    def mu_max(self):
        return max(self.means)

    @property
    def is_global_null(self):
        return self.n_true == self.n


@dataclass(frozen=True)
class EquicorrelatedModel:
    """rho plus the two factor laws and the null configuration."""

    rho: float
    f_spec: DistributionSpec
    g_spec: DistributionSpec
    config: NullConfiguration

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(
                f"rho must lie in [0, 1); rho={self.rho} is degenerate"
            )

    @classmethod
    def global_null(cls, rho, f_spec, g_spec, n):
        return cls(rho=rho, f_spec=f_spec, g_spec=g_spec,
                   config=NullConfiguration.global_null(n))

    def to_json(self):
        return {
            "rho": self.rho,
            "f": self.f_spec.to_json(),
            "g": self.g_spec.to_json(),
            "means": list(self.config.means),
        }


def model_from_json(obj):
    """Parse a model from its JSON object form.

    Accepts either an explicit "means" array or the shorthand
    {"n": N, "global_null": true}.
    """
    if not isinstance(obj, dict):
        raise DomainError("model must be a JSON object")
    required = {"rho", "f", "g"}
    missing = required - set(obj)
    if missing:
        raise DomainError(f"model is missing keys: {sorted(missing)}")
    allowed = required | {"means", "n", "global_null"}
    unknown = set(obj) - allowed
    if unknown:
        raise DomainError(f"unknown model keys: {sorted(unknown)}")
    f_spec = spec_from_json(obj["f"])
    g_spec = spec_from_json(obj["g"])
    if "means" in obj:
        means = tuple(float(m) for m in obj["means"])
        config = NullConfiguration(n=len(means), means=means)
    elif obj.get("global_null") and "n" in obj:
        config = NullConfiguration.global_null(int(obj["n"]))
    else:
        raise DomainError(
            "model needs either 'means' or {'n': ..., 'global_null': true}"
        )
    return EquicorrelatedModel(rho=float(obj["rho"]), f_spec=f_spec,
                               g_spec=g_spec, config=config)


class MarginalLaw:
    """Convolution marginal of the one-factor model.

    At rho = 0 every operation short-circuits to the F factor exactly; no
    quadrature noise enters the independent case. Instances are immutable
    and safe to share.
    """

    def __init__(self, model, tol=1e-12):
        self.model = model
        self.tol = float(tol)
        self.f = make_distribution(model.f_spec)
        self.g = make_distribution(model.g_spec)
        self.rho = float(model.rho)
        self._sr = math.sqrt(self.rho)
        self._s1 = math.sqrt(1.0 - self.rho)

    # -- knot seeding ------------------------------------------------------

    def _f_landmarks(self, extra_levels=()):
        ys = [0.0]
        for lev in list(_F_LEVELS) + list(extra_levels):
            lev = min(max(lev, 1e-280), 0.5)
            y = self.f.isf(lev)
            ys.append(y)
            ys.append(-y)
        return ys

    def factor_seeds(self, v, extra_f_levels=()):
        """u-axis knots: preimages of F landmarks along y(u), plus G scale."""
        seeds = [0.0]
        for lev in _G_LEVELS:
            u = self.g.isf(lev)
            seeds.append(u)
            seeds.append(-u)
        if self._sr > 0.0:
            for y in self._f_landmarks(extra_f_levels):
                seeds.append((v - self._s1 * y) / self._sr)
        return seeds

    # -- log-space convolution integrals -----------------------------------

    def _y_of(self, v, u):
        return (v - self._sr * u) / self._s1

    def _log_integral(self, v, log_payload, extra_f_levels=()):
        def log_integrand(u):
            return log_payload(self._y_of(v, u)) + self.g.log_pdf(u)

        val, _ = integrate_line_log(
            log_integrand, self.factor_seeds(v, extra_f_levels), rel_tol=self.tol
        )
        return val

    def log_survival(self, v):
        """ln P(X > v); finite for survival values down to 1e-280."""
        v = float(v)
        if self.rho == 0.0:
            return float(self.f.log_survival(v))
        return self._log_integral(v, self.f.log_survival)

    def survival(self, v):
        return math.exp(self.log_survival(v))

    def log_cdf(self, v):
        v = float(v)
        if self.rho == 0.0:
            return float(self.f.log_cdf(v))
        return self._log_integral(v, self.f.log_cdf)

    def cdf(self, v):
        """P(X <= v), accurate in both tails."""
        v = float(v)
        if self.rho == 0.0:
            return float(self.f.cdf(v))
        ls = self.log_survival(v)
        if ls <= math.log(0.5):
            return -math.expm1(ls)
        return math.exp(self.log_cdf(v))

    def pdf(self, v):
        """Convolution density f*(v)."""
        v = float(v)
        if self.rho == 0.0:
            return float(self.f.pdf(v))
        log_s1 = math.log(self._s1)

        def log_integrand(u):
            return self.f.log_pdf(self._y_of(v, u)) + self.g.log_pdf(u) - log_s1

        val, _ = integrate_line_log(log_integrand, self.factor_seeds(v),
                                    rel_tol=self.tol)
        return math.exp(val)

    # -- expectation of bounded payloads over the factor --------------------

    def expect_over_factor(self, payload, seeds, abs_tol=None):
        """integral payload(u) g(u) du for payload values in [0, 1]."""
        if abs_tol is None:
            abs_tol = self.tol
        val, _ = integrate_line(self.g.log_pdf, payload, seeds,
                                abs_tol=abs_tol, rel_tol=self.tol)
        return val

    # -- inverses ------------------------------------------------------------

    def isf(self, q):
        """Statistic threshold with marginal survival exactly q."""
        q = float(q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"isf requires q in (0, 1), got {q}")
        if self.rho == 0.0:
            return self.f.isf(q)
        lq = math.log(q)
        f = lambda c: self.log_survival(c) - lq
        c0 = max(self._s1 * self.f.isf(min(q, 0.5)),
                 self._sr * self.g.isf(min(q, 0.5)))
        step = max(0.5, 0.1 * abs(c0))
        return solve_decreasing(f, c0, step, xtol=1e-13, ftol=5e-13)

    def quantile(self, p):
        """Marginal quantile; p in (0, 1)."""
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p}")
        if self.rho == 0.0:
            return self.f.quantile(p)
        if p >= 0.5:
            return self.isf(1.0 - p)
        lp = math.log(p)
        f = lambda x: lp - self.log_cdf(x)
        c0 = min(self._s1 * self.f.quantile(p), self._sr * self.g.quantile(p))
        step = max(0.5, 0.1 * abs(c0))
        return solve_decreasing(f, c0, step, xtol=1e-13, ftol=5e-13)

    def bonferroni_cutoff(self, n, alpha):
        """Threshold c with marginal survival alpha / n, solved on the
        log-survival scale so n = 1e7 keeps full precision."""
        if n < 1:
            raise DomainError(f"need n >= 1, got {n}")
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        if self.rho == 0.0:
            return self.f.isf(alpha / n)
        lq = math.log(alpha) - math.log(n)
        f = lambda c: self.log_survival(c) - lq
        q = min(alpha / n, 0.5)
        c0 = max(self._s1 * self.f.isf(q), self._sr * self.g.isf(q))
        step = max(0.5, 0.1 * abs(c0))
        return solve_decreasing(f, c0, step, xtol=1e-13, ftol=5e-13)
