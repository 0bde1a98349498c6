"""Step-down multiple-testing engine: cutoff vectors, rejection rules,
admissibility checking, and truth accounting.

Indices are 0-based throughout. Rejection comparisons are closed
(p <= cutoff); ties between equal p-values break by original index, which
only matters for deterministic inputs since ties have probability zero
under continuous models.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CutoffVector:
    """Nondecreasing p-value cutoffs u_1 <= ... <= u_n inside [0, 1]."""

    u: tuple

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        if len(u) == 0:
            raise DomainError("cutoff vector must be nonempty")
        if u[0] < 0.0 or u[-1] > 1.0 or any(
            b < a for a, b in zip(u[:-1], u[1:])
        ):
            raise DomainError("cutoffs must be nondecreasing within [0, 1]")
        object.__setattr__(self, "u", u)

    def __len__(self):
        return len(self.u)

    def to_json(self):
        return list(self.u)


@dataclass(frozen=True)
class RejectionAccount:
    """Rejection outcome; V and S stay None until truth is supplied."""

    R: int
    rejected_indices: tuple
    M: int
    V: int | None = None
    S: int | None = None

    def to_json(self):
        return {
            "R": self.R,
            "V": self.V,
            "S": self.S,
            "M": self.M,
            "rejected_indices": list(self.rejected_indices),
        }


def holm_cutoffs(n, alpha):
    """Step-down cutoffs alpha / (n - i) for 0-based i."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return CutoffVector(tuple(alpha / (n - i) for i in range(n)))


def bonferroni_cutoffs(n, alpha):
    """Flat cutoffs alpha / n; the step-down rule then coincides with the
    single-step one."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return CutoffVector((alpha / n,) * n)


@dataclass(frozen=True)
class StepDownProcedure:
    """Named cutoff-vector factory usable by the simulation engine."""

    name: str
    cutoff_fn: callable

    def cutoffs(self, n, alpha):
        return self.cutoff_fn(n, alpha)


HOLM = StepDownProcedure("holm", holm_cutoffs)
BONFERRONI = StepDownProcedure("bonferroni", bonferroni_cutoffs)
PROCEDURES = {"holm": HOLM, "bonferroni": BONFERRONI}


def compute_pvalues(x, null_law):
    """One-sided p-values P_null(X > x_i) from the null marginal law.

    Carried through the log-survival path so extreme statistics give
    denormal-range p-values instead of flushing to zero prematurely.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    flat = out.reshape(-1)
    for i, xi in enumerate(x.reshape(-1)):
        flat[i] = math.exp(null_law.log_survival(float(xi)))
    return out


def run_step_down(p, cutoffs):
    """Apply the step-down rule: reject the M smallest p-values where M is
    the largest i such that every ordered p-value through i clears its
    cutoff."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise DomainError("p must be a vector")
    if len(p) != len(cutoffs):
        raise DomainError(
            f"{len(p)} p-values vs {len(cutoffs)} cutoffs"
        )
    order = np.argsort(p, kind="stable")
    ok = p[order] <= np.asarray(cutoffs.u)
    if ok.all():
        m = len(p)
    else:
        m = int(np.argmax(~ok))
    rejected = tuple(int(i) for i in order[:m])
    return RejectionAccount(R=m, rejected_indices=rejected, M=m)


def single_step_bonferroni(p, alpha):
    """Reject every hypothesis with p <= alpha / n."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise DomainError("p must be a vector")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    threshold = alpha / len(p)
    rejected = tuple(int(i) for i in np.flatnonzero(p <= threshold))
    return RejectionAccount(R=len(rejected), rejected_indices=rejected,
                            M=len(rejected))


@dataclass(frozen=True)
class GordonCheck:
    """Admissibility verdict: cutoffs dominated by alpha / (n - i)."""

    ok: bool
    first_violation: int | None

    def to_json(self):
        return {"ok": self.ok, "first_violation": self.first_violation}


def validate_gordon(cutoffs, alpha):
    """Check u_i <= alpha / (n - i) for every 0-based i.

    A violation certifies that the step-down rule cannot control the
    familywise error rate at alpha across all distributions; the first
    offending index is reported.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    n = len(cutoffs)
    for i, u in enumerate(cutoffs.u):
        if u > alpha / (n - i):
            return GordonCheck(ok=False, first_violation=i)
    return GordonCheck(ok=True, first_violation=None)


def account(rejections, config):
    """Fill in V = |rejected among true nulls| and S = R - V."""
    n = config.n
    for i in rejections.rejected_indices:
        if not 0 <= i < n:
            raise DomainError(f"rejected index {i} outside 0..{n - 1}")
    nulls = set(config.true_null_indices)
    v = sum(1 for i in rejections.rejected_indices if i in nulls)
    return replace(rejections, V=v, S=rejections.R - v)
