"""Monte Carlo estimation of FWER, any-rejection, and any-power
probabilities for correlated statistic panels.

Replications are split into fixed-size chunks; chunk k draws from a
generator seeded by SeedSequence(seed, spawn_key=(k,)), so estimates are
bit-identical for any worker count and chunks can run concurrently. The
step-down account is evaluated on the statistic scale: the ordered p-value
condition P_(j) <= u_j is equivalent to X_(n+1-j) >= c_j with c_j the null
marginal threshold at survival u_j, which avoids per-replication quadrature.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import (
    SCALED_STUDENT_T,
    STANDARD_NORMAL,
    make_distribution,
    scaled_student_t,
    standard_normal,
)
from .errors import ConfigurationError, DomainError
from .factor_model import NullConfiguration
from .fwer_analytics import validate_correlation_matrix

_Z975 = 1.959963984540054


def _factor_matrix(sigma):
    """Square root factor of a PSD correlation matrix.

    Cholesky when it holds; otherwise a symmetric-eigenvalue factor with
    roundoff-level negative eigenvalues (>= -1e-10) clamped to zero and
    anything more negative rejected.
    """
    sigma = validate_correlation_matrix(sigma)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(sigma)
        if np.any(vals < -1e-10):
            raise DomainError(
                f"correlation matrix is not PSD (min eigenvalue {vals.min():.3e})"
            )
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)


def _check_means(means, n):
    means = np.asarray([float(m) for m in means], dtype=float)
    if means.shape != (n,):
        raise DomainError(f"means must have length {n}")
    if np.any(means < 0.0):
        raise DomainError("one-sided alternatives require means >= 0")
    return means


class OneFactor:
    """X = sqrt(1-rho) Z + sqrt(rho) U + mu with Z_i iid F and U from G."""

    def __init__(self, rho, f_spec, g_spec, means):
        if not 0.0 <= rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {rho}")
        self.rho = float(rho)
        self.f_spec = f_spec
        self.g_spec = g_spec
        self.means = _check_means(means, len(means))
        self.n = len(self.means)
        self._f = make_distribution(f_spec)
        self._g = make_distribution(g_spec)
        self._sr = math.sqrt(self.rho)
        self._s1 = math.sqrt(1.0 - self.rho)

    def sample(self, rng, m):
        z = self._f.sample(rng, (m, self.n))
        u = self._g.sample(rng, m)
        return self._s1 * z + self._sr * u[:, None] + self.means[None, :]

    def matches_null_law(self, law):
        return (
            law.model.rho == self.rho
            and law.model.f_spec == self.f_spec
            and law.model.g_spec == self.g_spec
        )


class GaussianGeneral:
    """Jointly Gaussian panel with an explicit correlation matrix, or the
    equicorrelated matrix in an O(n) one-factor representation."""

    def __init__(self, sigma, means):
        self._L = _factor_matrix(sigma)
        self.n = self._L.shape[0]
        self.means = _check_means(means, self.n)
        self._equi_rho = None

    @classmethod
    def equicorrelated(cls, rho, n, means):
        """Gamma(rho) correlation without materializing the n x n matrix."""
        if not 0.0 <= rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {rho}")
        self = cls.__new__(cls)
        self._L = None
        self.n = int(n)
        self.means = _check_means(means, self.n)
        self._equi_rho = float(rho)
        return self

    def _gaussian(self, rng, m):
        if self._equi_rho is not None:
            z = rng.standard_normal((m, self.n))
            u = rng.standard_normal(m)
            return (
                math.sqrt(1.0 - self._equi_rho) * z
                + math.sqrt(self._equi_rho) * u[:, None]
            )
        z = rng.standard_normal((m, self.n))
        return z @ self._L.T

    def sample(self, rng, m):
        return self._gaussian(rng, m) + self.means[None, :]

    def matches_null_law(self, law):
        # the null marginal is standard normal; a one-factor law is that
        # exactly when rho = 0 with normal F, or normal (x) normal any rho
        f_normal = law.model.f_spec.kind == STANDARD_NORMAL
        if law.model.rho == 0.0:
            return f_normal
        return f_normal and law.model.g_spec.kind == STANDARD_NORMAL


class EllipticalT:
    """Elliptically contoured t panel: L xi * sqrt((nu-2)/W) + mu with
    W ~ chi^2_nu, scaled so every marginal has variance 1 (each marginal is
    the variance-standardized t_nu)."""

    def __init__(self, sigma, nu, means):
        if not nu > 2.0:
            raise DomainError(f"nu must exceed 2 for unit variance, got {nu}")
        self.nu = float(nu)
        self._gauss = GaussianGeneral(sigma, np.zeros(np.shape(sigma)[0]))
        self.n = self._gauss.n
        self.means = _check_means(means, self.n)

    @classmethod
    def equicorrelated(cls, rho, nu, n, means):
        if not nu > 2.0:
            raise DomainError(f"nu must exceed 2 for unit variance, got {nu}")
        self = cls.__new__(cls)
        self.nu = float(nu)
        self._gauss = GaussianGeneral.equicorrelated(rho, n, np.zeros(int(n)))
        self.n = int(n)
        self.means = _check_means(means, self.n)
        return self

    def sample(self, rng, m):
        z = self._gauss._gaussian(rng, m)
        w = rng.chisquare(self.nu, m)
        scale = np.sqrt((self.nu - 2.0) / w)
        return z * scale[:, None] + self.means[None, :]

    def matches_null_law(self, law):
        return (
            law.model.rho == 0.0
            and law.model.f_spec.kind == SCALED_STUDENT_T
            and law.model.f_spec.nu == self.nu
        )


@dataclass(frozen=True)
class SimulationConfig:
    replications: int
    seed: int
    alpha: float
    batch_size: int = 16384
    ci_level: float = 0.95

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be at least 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.ci_level < 1.0:
            raise DomainError("ci_level must lie in (0, 1)")


@dataclass(frozen=True)
class FwerEstimate:
    """Binomial point estimate with normal-approximation interval.

    A zero count reports ci_high = 3 / replications (rule of three) so
    deep-tail cells still carry a usable upper limit.
    """

    p_hat: float
    std_err: float
    ci_low: float
    ci_high: float
    replications: int

    def to_json(self):
        return {
            "p_hat": self.p_hat,
            "std_err": self.std_err,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "replications": self.replications,
        }


def _estimate_from_count(successes, reps, ci_level):
    p = successes / reps
    se = math.sqrt(p * (1.0 - p) / reps)
    if ci_level == 0.95:
        z = _Z975
    else:
        z = make_distribution(standard_normal()).quantile((1.0 + ci_level) / 2.0)
    if successes == 0:
        lo, hi = 0.0, min(3.0 / reps, 1.0)
    elif successes == reps:
        lo, hi = max(1.0 - 3.0 / reps, 0.0), 1.0
    else:
        lo, hi = max(p - z * se, 0.0), min(p + z * se, 1.0)
    return FwerEstimate(p_hat=p, std_err=se, ci_low=lo, ci_high=hi,
                        replications=reps)


def _chunk_sizes(reps, batch):
    sizes = [batch] * (reps // batch)
    if reps % batch:
        sizes.append(reps % batch)
    return sizes


def _run_chunks(model, config, count_fn, workers):
    sizes = _chunk_sizes(config.replications, config.batch_size)

    def one(k):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(k,))
        )
        x = model.sample(rng, sizes[k])
        return count_fn(x)

    if workers <= 1:
        total = sum(one(k) for k in range(len(sizes)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            total = sum(pool.map(one, range(len(sizes))))
    return int(total)


def _statistic_thresholds(null_law, cutoffs):
    """Map p-value cutoffs to statistic thresholds c_j (nonincreasing)."""
    out = np.empty(len(cutoffs))
    for j, u in enumerate(cutoffs.u):
        out[j] = null_law.isf(min(max(u, 1e-280), 1.0 - 1e-16))
    return out


def _check_law(model, null_law):
    if not model.matches_null_law(null_law):
        raise ConfigurationError(
            "null_law does not describe the model's null marginal"
        )


def _step_down_counts(x, thresholds, null_idx, alt_idx, event):
    """Per-panel indicator counts for the requested event.

    Rejects the M largest statistics where M counts the leading satisfied
    conditions X_(n+1-j) >= c_j. Events: 'any' (R >= 1), 'fwer' (V >= 1),
    'anypwr' (S >= 1).
    """
    if event == "any":
        return int(np.count_nonzero(x.max(axis=1) >= thresholds[0]))
    xs = -np.sort(-x, axis=1)
    lead = np.logical_and.accumulate(xs >= thresholds[None, :], axis=1)
    m = lead.sum(axis=1)
    nonzero = m >= 1
    if not np.any(nonzero):
        return 0
    border = xs[np.arange(len(m)), np.maximum(m, 1) - 1]
    if event == "fwer":
        group_max = x[:, null_idx].max(axis=1)
    elif event == "anypwr":
        group_max = x[:, alt_idx].max(axis=1)
    else:
        raise DomainError(f"unknown event {event!r}")
    return int(np.count_nonzero(nonzero & (group_max >= border)))


def estimate_prob_any_rejection(model, proc, n, config, null_law, workers=1):
    """Monte Carlo P(R >= 1) for a step-down procedure.

    R >= 1 is exactly the event that the smallest p-value clears the first
    cutoff, i.e. the panel maximum exceeds one statistic threshold.
    """
    _check_law(model, null_law)
    if model.n != n:
        raise DomainError(f"model has n={model.n}, requested {n}")
    u1 = proc.cutoffs(n, config.alpha).u[0]
    c1 = null_law.isf(u1)
    count = _run_chunks(
        model, config,
        lambda x: int(np.count_nonzero(x.max(axis=1) >= c1)),
        workers,
    )
    return _estimate_from_count(count, config.replications, config.ci_level)


def _estimate_event(model, proc, n, config, null_law, truth, event, workers):
    _check_law(model, null_law)
    if model.n != n:
        raise DomainError(f"model has n={model.n}, requested {n}")
    if truth.n != n:
        raise DomainError(f"truth has n={truth.n}, requested {n}")
    if not np.array_equal(np.asarray(truth.means), model.means):
        raise ConfigurationError("truth means differ from model means")
    null_idx = np.array(truth.true_null_indices, dtype=int)
    alt_idx = np.array(
        [i for i in range(n) if i not in set(truth.true_null_indices)],
        dtype=int,
    )
    if event == "fwer" and null_idx.size == 0:
        raise ConfigurationError("FWER is undefined with no true nulls")
    if event == "anypwr" and alt_idx.size == 0:
        raise ConfigurationError("power requires at least one false null")
    cutoffs = proc.cutoffs(n, config.alpha)

    if event == "fwer" and null_idx.size == n:
        # global null: V >= 1 iff R >= 1 iff the panel max clears the first
        # threshold, for any step-down rule
        c1 = null_law.isf(cutoffs.u[0])
        count = _run_chunks(
            model, config,
            lambda x: int(np.count_nonzero(x.max(axis=1) >= c1)),
            workers,
        )
    else:
        thresholds = _statistic_thresholds(null_law, cutoffs)
        count = _run_chunks(
            model, config,
            lambda x: _step_down_counts(x, thresholds, null_idx, alt_idx,
                                        event),
            workers,
        )
    return _estimate_from_count(count, config.replications, config.ci_level)


def estimate_fwer(model, proc, n, config, null_law, truth, workers=1):
    """Monte Carlo P(V >= 1): at least one true null rejected."""
    return _estimate_event(model, proc, n, config, null_law, truth, "fwer",
                           workers)


def estimate_anypwr(model, proc, n, config, null_law, truth, workers=1):
    """Monte Carlo P(S >= 1): at least one false null rejected."""
    return _estimate_event(model, proc, n, config, null_law, truth, "anypwr",
                           workers)
