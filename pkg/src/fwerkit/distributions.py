"""Unit-variance factor distributions with numerically robust tails.

Each family is standardized analytically so its variance is exactly 1:
Laplace uses scale 1/sqrt(2); the Student-t is T_nu * sqrt((nu-2)/nu); the
Pareto tail uses b = 2 + delta with left endpoint eta = sqrt(delta/(2+delta))
* (delta+1); the generalized normal is scaled by sqrt(Gamma(1/beta) /
Gamma(3/beta)).

log_survival is always computed from tail series / closed forms rather than
log(1 - cdf), so it stays finite and accurate down to survival values near
1e-300. Quantiles invert the monotone log-survival curve with bracketed
root finding; families with closed-form inverses override it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx, gammaln

from . import _special
from ._roots import solve_decreasing
from .errors import DomainError

STANDARD_NORMAL = "standard_normal"
LAPLACE = "laplace"
SCALED_STUDENT_T = "scaled_student_t"
STANDARDIZED_PARETO = "standardized_pareto"
GENERALIZED_NORMAL = "generalized_normal"

KINDS = (STANDARD_NORMAL, LAPLACE, SCALED_STUDENT_T, STANDARDIZED_PARETO,
         GENERALIZED_NORMAL)

_LOG_HALF = math.log(0.5)
_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative description of a standardized factor law."""

    kind: str
    nu: float | None = None
    delta: float | None = None
    beta_shape: float | None = None
    centered: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        allowed = _PARAMS[self.kind]
        for name in ("nu", "delta", "beta_shape"):
            value = getattr(self, name)
            if value is not None and name not in allowed:
                raise DomainError(f"{name} is not a parameter of {self.kind}")
            if value is None and name in allowed:
                raise DomainError(f"{self.kind} requires parameter {name}")
        if self.centered and self.kind != STANDARDIZED_PARETO:
            raise DomainError("centered applies only to standardized_pareto")
        if self.nu is not None and not self.nu > 2.0:
            raise DomainError(f"nu must exceed 2 for finite variance, got {self.nu}")
        if self.delta is not None and not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.beta_shape is not None and not self.beta_shape >= 0.5:
            raise DomainError(
                f"beta_shape must be at least 0.5, got {self.beta_shape}"
            )

    def to_json(self):
        out = {"kind": self.kind}
        for name in _PARAMS[self.kind]:
            out[name] = getattr(self, name)
        if self.kind == STANDARDIZED_PARETO:
            out["centered"] = self.centered
        return out


_PARAMS = {
    STANDARD_NORMAL: (),
    LAPLACE: (),
    SCALED_STUDENT_T: ("nu",),
    STANDARDIZED_PARETO: ("delta",),
    GENERALIZED_NORMAL: ("beta_shape",),
}


def spec_from_json(obj):
    """Parse a spec from {"kind": ..., params}; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise DomainError("distribution spec must be a JSON object")
    if "kind" not in obj:
        raise DomainError("distribution spec is missing 'kind'")
    kind = obj["kind"]
    if kind not in KINDS:
        raise DomainError(f"unknown distribution kind {kind!r}")
    allowed = set(_PARAMS[kind]) | {"kind"}
    if kind == STANDARDIZED_PARETO:
        allowed.add("centered")
    unknown = set(obj) - allowed
    if unknown:
        raise DomainError(f"unknown keys for {kind}: {sorted(unknown)}")
    kwargs = {}
    for key, value in obj.items():
        if key == "kind":
            continue
        if key == "centered":
            kwargs[key] = bool(value)
        else:
            try:
                kwargs[key] = float(value)
            except (TypeError, ValueError):
                raise DomainError(f"parameter {key} must be numeric, got {value!r}")
    return DistributionSpec(kind=kind, **kwargs)


def _maybe_scalar(x, out):
    return float(out) if np.ndim(x) == 0 else out


class StandardizedDistribution:
    """Evaluator bundle for one unit-variance factor law.

    Immutable after construction; every method is a pure function, and
    ``sample`` draws from a caller-owned numpy Generator.
    """

    spec: DistributionSpec
    symmetric = True

    # subclasses provide _sf_half(x) and _log_sf_half(x) for x >= 0

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        s = self._sf_half(np.abs(x))
        out = np.where(x >= 0.0, s, 1.0 - s)
        return _maybe_scalar(x, out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.survival(-x)

    def log_survival(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(
                x >= 0.0,
                self._log_sf_half(np.abs(x)),
                np.log1p(-self._sf_half(np.abs(x))),
            )
        return _maybe_scalar(x, out)

    def log_cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.log_survival(-x)

    def quantile(self, p):
        """Point x with cdf(x) = p, for p in (0, 1)."""
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p}")
        if p == 0.5:
            return 0.0
        if p > 0.5:
            return self.isf(1.0 - p)
        return -self.isf(p)

    def isf(self, q):
        """Inverse survival: the x with survival(x) = q, q in (0, 1).

        Solved on the log-survival curve so deep-tail targets keep full
        relative precision.
        """
        q = float(q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"isf requires q in (0, 1), got {q}")
        lq = math.log(q)
        f = lambda x: self.log_survival(x) - lq
        x0, step = self._isf_seed(lq)
        return solve_decreasing(f, x0, step, xtol=1e-13, ftol=1e-13)

    def _isf_seed(self, lq):
        return 0.0, 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(self.log_pdf(x))
        return _maybe_scalar(x, out)


class StandardNormal(StandardizedDistribution):
    def __init__(self, spec):
        self.spec = spec

    def _sf_half(self, x):
        return 0.5 * erfc(x / _SQRT2)

    def _log_sf_half(self, x):
        return _LOG_HALF + np.log(erfcx(x / _SQRT2)) - 0.5 * x * x

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x - _LOG_SQRT_2PI

    def _isf_seed(self, lq):
        # one-term Mills inversion of log S = -x^2/2 - log(x sqrt(2 pi))
        t = max(-2.0 * lq, 1.0)
        x0 = math.sqrt(max(t - math.log(2.0 * math.pi * t), 0.25))
        return x0, 0.5

    def sample(self, rng, size=None):
        return rng.standard_normal(size)


class Laplace(StandardizedDistribution):
    scale = 1.0 / _SQRT2

    def __init__(self, spec):
        self.spec = spec

    def _sf_half(self, x):
        return 0.5 * np.exp(-x / self.scale)

    def _log_sf_half(self, x):
        return _LOG_HALF - x / self.scale

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.abs(x) / self.scale - math.log(2.0 * self.scale)

    def isf(self, q):
        q = float(q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"isf requires q in (0, 1), got {q}")
        if q <= 0.5:
            return -self.scale * math.log(2.0 * q)
        return self.scale * math.log(2.0 * (1.0 - q))

    def sample(self, rng, size=None):
        return rng.laplace(0.0, self.scale, size)


class ScaledStudentT(StandardizedDistribution):
    def __init__(self, spec):
        self.spec = spec
        self.nu = float(spec.nu)
        self.k = math.sqrt((self.nu - 2.0) / self.nu)
        self._log_norm = (
            gammaln((self.nu + 1.0) / 2.0)
            - gammaln(self.nu / 2.0)
            - 0.5 * math.log(self.nu * math.pi)
        )
        # continued-fraction region boundary for I_z(nu/2, 1/2)
        self._z_direct = (self.nu / 2.0 + 1.0) / (self.nu / 2.0 + 2.5)

    def _z_of(self, x):
        t = x / self.k
        return self.nu / (self.nu + t * t)

    def _sf_half(self, x):
        z = self._z_of(x)
        return 0.5 * _special.betainc_reg(self.nu / 2.0, 0.5, z)

    def _log_sf_half(self, x):
        shape = np.shape(x)
        z = np.atleast_1d(self._z_of(np.asarray(x, dtype=float)))
        out = np.empty(z.shape)
        deep = z < self._z_direct
        if np.any(deep):
            out[deep] = _LOG_HALF + _special.log_betainc_small_x(
                self.nu / 2.0, 0.5, z[deep]
            )
        if np.any(~deep):
            out[~deep] = np.log(
                0.5 * _special.betainc_reg(self.nu / 2.0, 0.5, z[~deep])
            )
        return out.reshape(shape)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        t = x / self.k
        return (
            self._log_norm
            - (self.nu + 1.0) / 2.0 * np.log1p(t * t / self.nu)
            - math.log(self.k)
        )

    def _isf_seed(self, lq):
        # polynomial tail: S(x) ~ A (x/k)^(-nu)
        log_a = self._log_norm + 0.5 * (self.nu + 1.0) * math.log(self.nu) \
            - math.log(self.nu)
        t0 = math.exp(max((log_a - lq) / self.nu, 0.0))
        return self.k * max(t0, 1.0), 0.5

    def sample(self, rng, size=None):
        return rng.standard_t(self.nu, size) * self.k


class GeneralizedNormal(StandardizedDistribution):
    def __init__(self, spec):
        self.spec = spec
        self.beta = float(spec.beta_shape)
        self.a = 1.0 / self.beta
        self.scale = math.exp(0.5 * (gammaln(self.a) - gammaln(3.0 * self.a)))
        self._log_norm = (
            math.log(self.beta) - math.log(2.0 * self.scale) - gammaln(self.a)
        )

    def _z_of(self, x):
        return (np.abs(x) / self.scale) ** self.beta

    def _sf_half(self, x):
        return 0.5 * _special.gamma_q(self.a, self._z_of(x))

    def _log_sf_half(self, x):
        return _LOG_HALF + _special.log_gamma_q(self.a, self._z_of(x))

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._log_norm - self._z_of(x)

    def _isf_seed(self, lq):
        # log Q(a, z) ~ -z + (a - 1) log z - lgamma(a)
        z = max(-(lq - _LOG_HALF) - gammaln(self.a), 0.5)
        for _ in range(3):
            z = max(-(lq - _LOG_HALF) - gammaln(self.a) + (self.a - 1.0)
                    * math.log(z), 0.5)
        return self.scale * z ** self.a, 0.5 * self.scale

    def sample(self, rng, size=None):
        g = rng.standard_gamma(self.a, size)
        signs = rng.integers(0, 2, size) * 2 - 1
        return self.scale * g ** self.a * signs


class StandardizedPareto(StandardizedDistribution):
    """Pareto tail with variance 1; support [eta, inf) in raw form.

    The raw law has mean b*eta/(b-1) > 0; ``centered=True`` subtracts it
    for callers who want a mean-zero factor.
    """

    symmetric = False

    def __init__(self, spec):
        self.spec = spec
        self.delta = float(spec.delta)
        self.b = 2.0 + self.delta
        self.eta = math.sqrt(self.delta / (2.0 + self.delta)) * (self.delta + 1.0)
        self.mean_raw = self.b * self.eta / (self.b - 1.0)
        self.shift = self.mean_raw if spec.centered else 0.0
        self.support_left = self.eta - self.shift

    def _raw(self, x):
        return np.asarray(x, dtype=float) + self.shift

    def survival(self, x):
        z = self._raw(x)
        with np.errstate(divide="ignore"):
            out = np.where(z <= self.eta, 1.0, (self.eta / np.maximum(z, self.eta))
                           ** self.b)
        return _maybe_scalar(x, out)

    def cdf(self, x):
        z = self._raw(x)
        out = np.where(z <= self.eta, 0.0,
                       -np.expm1(self.b * (math.log(self.eta)
                                           - np.log(np.maximum(z, self.eta)))))
        return _maybe_scalar(x, out)

    def log_survival(self, x):
        z = self._raw(x)
        out = np.where(z <= self.eta, 0.0,
                       self.b * (math.log(self.eta)
                                 - np.log(np.maximum(z, self.eta))))
        return _maybe_scalar(x, out)

    def log_cdf(self, x):
        z = self._raw(x)
        with np.errstate(divide="ignore"):
            out = np.where(
                z <= self.eta,
                -np.inf,
                np.log(-np.expm1(self.b * (math.log(self.eta)
                                           - np.log(np.maximum(z, self.eta))))),
            )
        return _maybe_scalar(x, out)

    def log_pdf(self, x):
        z = self._raw(x)
        with np.errstate(divide="ignore"):
            out = np.where(
                z < self.eta,
                -np.inf,
                math.log(self.b) + self.b * math.log(self.eta)
                - (self.b + 1.0) * np.log(np.maximum(z, self.eta)),
            )
        return _maybe_scalar(x, out)

    def quantile(self, p):
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p}")
        return self.eta * math.exp(-math.log1p(-p) / self.b) - self.shift

    def isf(self, q):
        q = float(q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"isf requires q in (0, 1), got {q}")
        return self.eta * q ** (-1.0 / self.b) - self.shift

    def sample(self, rng, size=None):
        u = rng.random(size)
        return self.eta * u ** (-1.0 / self.b) - self.shift


_FAMILIES = {
    STANDARD_NORMAL: StandardNormal,
    LAPLACE: Laplace,
    SCALED_STUDENT_T: ScaledStudentT,
    GENERALIZED_NORMAL: GeneralizedNormal,
    STANDARDIZED_PARETO: StandardizedPareto,
}


def make_distribution(spec):
    """Build the evaluator bundle for a validated spec."""
    if not isinstance(spec, DistributionSpec):
        raise DomainError("make_distribution expects a DistributionSpec")
    return _FAMILIES[spec.kind](spec)


def standard_normal():
    return DistributionSpec(kind=STANDARD_NORMAL)


def laplace():
    return DistributionSpec(kind=LAPLACE)


def scaled_student_t(nu):
    return DistributionSpec(kind=SCALED_STUDENT_T, nu=nu)


def standardized_pareto(delta, centered=False):
    return DistributionSpec(kind=STANDARDIZED_PARETO, delta=delta,
                            centered=centered)


def generalized_normal(beta_shape):
    return DistributionSpec(kind=GENERALIZED_NORMAL, beta_shape=beta_shape)
