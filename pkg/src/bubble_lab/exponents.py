"""Exact algebra of the critical exponent hyperbola.

Everything downstream keys off the pair (p0, q0) with

    1/(p0+1) + 1/(q0+1) = (n-2)/n,

and off which side of the threshold n/(n-2) the smaller exponent p0
falls.  Misclassifying the regime silently corrupts every decay law and
energy coefficient, so rational inputs are classified with exact
arithmetic and floats with a tight tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from numbers import Rational

HYPERBOLA_TOL = 1e-12
LOG_BOUNDARY_TOL = 1e-12


class Regime(Enum):
    """Decay regime of the ground state U, ordered SLOW < LOG < FAST."""

    SLOW = 0   # p0 < n/(n-2): U decays like r^{2-(n-2)p0}
    LOG = 1    # p0 = n/(n-2): log-corrected decay
    FAST = 2   # p0 > n/(n-2): U decays like the fundamental solution


class ExponentError(ValueError):
    """Inadmissible exponent data (off the hyperbola, no partner, ...)."""


class UnsupportedRegimeError(ExponentError):
    """Operation has no defined value in this regime."""


def critical_partner(n: int, p0) -> float:
    """Return q0 such that (p0, q0) lies on the critical hyperbola.

    Exact (Fraction) when p0 is rational, float otherwise.
    Raises ExponentError when (n-2)/n - 1/(p0+1) <= 0, i.e. no positive
    partner exists.
    """
    if n < 3:
        raise ExponentError(f"dimension n={n} must be >= 3")
    if isinstance(p0, Rational):
        gap = Fraction(n - 2, n) - Fraction(1, 1) / (Fraction(p0) + 1)
        if gap <= 0:
            raise ExponentError(f"p0={p0} has no positive critical partner in n={n}")
        return Fraction(1, 1) / gap - 1
    gap = (n - 2) / n - 1.0 / (p0 + 1.0)
    if gap <= 0:
        raise ExponentError(f"p0={p0} has no positive critical partner in n={n}")
    return 1.0 / gap - 1.0


def pn_threshold(n: int) -> float:
    """Lower admissibility threshold max{1, (3+sqrt(4n+1))/(2(n-2))}.

    Restricted to n >= 4: at n=3 the formula exceeds n/(n-2), which is
    inconsistent with the role of the threshold, so it is rejected.
    """
    if n < 4:
        raise ExponentError(f"pn_threshold requires n >= 4, got n={n}")
    return max(1.0, (3.0 + math.sqrt(4.0 * n + 1.0)) / (2.0 * (n - 2)))


def classify_regime(n: int, p0) -> Regime:
    """Classify p0 against the threshold n/(n-2).

    Rational p0 is compared exactly; floats use a 1e-12 band around the
    boundary for the LOG case.
    """
    if p0 <= 1:
        raise ExponentError(f"p0={p0} must exceed 1")
    if isinstance(p0, Rational):
        threshold = Fraction(n, n - 2)
        p0 = Fraction(p0)
        if p0 < threshold:
            return Regime.SLOW
        if p0 == threshold:
            return Regime.LOG
        return Regime.FAST
    threshold = n / (n - 2)
    if abs(p0 - threshold) <= LOG_BOUNDARY_TOL * max(1.0, abs(threshold)):
        return Regime.LOG
    return Regime.SLOW if p0 < threshold else Regime.FAST


@dataclass(frozen=True)
class ExponentPair:
    """A point (p0, q0) on the critical hyperbola plus its perturbation.

    The perturbed exponents p = p0 - alpha*eps, q = q0 - beta*eps are
    stored at construction so that eps = 0 recovers the critical pair
    bit-exactly.
    """

    n: int
    p0: float
    q0: float
    alpha: float = 0.0
    beta: float = 0.0
    epsilon: float = 0.0
    regime: Regime = field(init=False)
    p: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        if self.n < 3:
            raise ExponentError(f"dimension n={self.n} must be >= 3")
        if self.epsilon < 0:
            raise ExponentError("epsilon must be >= 0")
        residual = abs(1.0 / (float(self.p0) + 1) + 1.0 / (float(self.q0) + 1)
                       - (self.n - 2) / self.n)
        if residual > HYPERBOLA_TOL:
            raise ExponentError(
                f"(p0, q0)=({self.p0}, {self.q0}) off the hyperbola, residual {residual:.3g}")
        if float(self.p0) > float(self.q0) + HYPERBOLA_TOL:
            raise ExponentError("require p0 <= q0")
        object.__setattr__(self, "regime", classify_regime(self.n, self.p0))
        object.__setattr__(self, "p", float(self.p0) - self.alpha * self.epsilon)
        object.__setattr__(self, "q", float(self.q0) - self.beta * self.epsilon)

    @classmethod
    def from_p0(cls, n: int, p0, alpha: float = 0.0, beta: float = 0.0,
                epsilon: float = 0.0) -> "ExponentPair":
        """Build the pair by solving the hyperbola for q0."""
        return cls(n=n, p0=p0, q0=critical_partner(n, p0),
                   alpha=alpha, beta=beta, epsilon=epsilon)

    @property
    def is_symmetric(self) -> bool:
        return float(self.p0) == float(self.q0)

    def tail_exponent_U(self) -> float:
        """Decay power of U at infinity (log-corrected power in LOG)."""
        if self.regime is Regime.SLOW:
            return (self.n - 2) * float(self.p0) - 2.0
        return float(self.n - 2)

    def tail_exponent_V(self) -> float:
        return float(self.n - 2)


@dataclass(frozen=True)
class DualExponents:
    """Gradient-embedding exponents p*, q* of the pair."""

    p_star: float
    q_star: float

    def __post_init__(self):
        if self.p_star <= 1 or self.q_star <= 1:
            raise ExponentError("dual exponents must exceed 1")

    @classmethod
    def from_pair(cls, pair: ExponentPair) -> "DualExponents":
        p0, q0, n = float(pair.p0), float(pair.q0), pair.n
        p_star = 1.0 / (p0 / (p0 + 1) - 1.0 / n)
        q_star = 1.0 / (q0 / (q0 + 1) - 1.0 / n)
        return cls(p_star=p_star, q_star=q_star)


def concentration_exponent(pair: ExponentPair) -> float:
    """epsilon-power of the concentration scale delta.

    (n-1)/(n-2) in the FAST regime, ((n-2)p0-1)/((n-2)p0-2) in SLOW.
    The LOG regime has no published rate and is rejected.
    """
    if pair.regime is Regime.LOG:
        raise UnsupportedRegimeError("no concentration rate at the LOG boundary")
    if pair.regime is Regime.FAST:
        return (pair.n - 1) / (pair.n - 2)
    kappa = (pair.n - 2) * float(pair.p0)
    return (kappa - 1.0) / (kappa - 2.0)
