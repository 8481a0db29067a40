"""Closed-form growth exponents for eigenfunction L^p bounds.

All quantities are exponents of h^{-1}: a result ``e`` stands for the bound
``||u||_{L^p(X)} <~ h^{-e} ||u||_{L^2(M)}``.  Lebesgue indices and the
neighbourhood rate ``beta`` are carried as exact :class:`fractions.Fraction`
values so that branch values can be compared exactly at the breakpoints;
``p = inf`` is represented by :data:`math.inf` and ``1/inf`` is 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DomainError

Index = Union[int, float, Fraction, str]
Real = Union[int, float, Fraction, str]

HALF = Fraction(1, 2)


class Regime(str, enum.Enum):
    HIGH_P = "high_p"
    MIDDLE_P = "middle_p"
    LOW_P = "low_p"
    CLAMPED_LOW_BETA = "clamped_low_beta"
    CLAMPED_HIGH_BETA = "clamped_high_beta"


class Justification(str, enum.Enum):
    WHOLE_MANIFOLD = "obs1_whole_manifold"
    SUBMANIFOLD_SLAB = "obs3_submanifold_slab"
    INTERPOLATION = "interpolation"
    BURQ_ZUILY = "burq_zuily_endpoint"


def as_index(p: Index) -> Fraction | float:
    """Normalise a Lebesgue index to a Fraction, or ``math.inf``.

    Strings such as ``"inf"``, ``"5/2"`` and ``"2.5"`` are accepted.  Finite
    floats are read through their shortest decimal repr, so ``2.5`` becomes
    ``5/2`` rather than a binary approximation.
    """
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo", "+inf"):
            return math.inf
        return Fraction(s)
    if isinstance(p, float):
        if math.isinf(p) and p > 0:
            return math.inf
        if math.isnan(p) or math.isinf(p):
            raise DomainError(f"p={p!r} is not a Lebesgue index")
        return Fraction(repr(p))
    return Fraction(p)


def as_real(x: Real) -> Fraction:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"expected a finite real, got {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def inverse(p: Index) -> Fraction:
    """Return 1/p exactly, with 1/inf = 0."""
    q = as_index(p)
    if q == math.inf:
        return Fraction(0)
    return 1 / q


def format_index(p: Index) -> str:
    q = as_index(p)
    return "inf" if q == math.inf else str(q)


def _check_p(p: Index) -> Fraction | float:
    q = as_index(p)
    if q < 2:
        raise DomainError(f"p={format_index(q)} must satisfy p >= 2")
    return q


def _check_n(n: int) -> None:
    if int(n) != n or n < 2:
        raise DomainError(f"n={n} must be an integer >= 2")


@dataclass(frozen=True)
class Breakpoints:
    p_stz: Fraction
    p_hyp: Fraction


@dataclass(frozen=True)
class ExponentQuery:
    n: int
    k: int
    p: Fraction | float
    beta: Fraction | None = None

    def __post_init__(self):
        _check_n(self.n)
        if not 0 <= self.k <= self.n:
            raise DomainError(f"k={self.k} must satisfy 0 <= k <= n={self.n}")
        object.__setattr__(self, "p", _check_p(self.p))
        if self.beta is not None:
            object.__setattr__(self, "beta", as_real(self.beta))


@dataclass(frozen=True)
class ExponentResult:
    exponent: Fraction
    regime: Regime
    log_loss: bool
    justification: Justification

    def __float__(self) -> float:
        return float(self.exponent)


def breakpoints(n: int) -> Breakpoints:
    """Stein-Tomas index 2(n+1)/(n-1) and hypersurface index 2n/(n-1)."""
    _check_n(n)
    return Breakpoints(Fraction(2 * (n + 1), n - 1), Fraction(2 * n, n - 1))


# Each branch is a function of (n, 1/p) so the breakpoint tests can evaluate
# both sides of a switch at the same point.

def whole_high(n: int, ip: Fraction) -> Fraction:
    return Fraction(n - 1, 2) - n * ip


def whole_low(n: int, ip: Fraction) -> Fraction:
    return Fraction(n - 1, 4) - Fraction(n - 1, 2) * ip


def hyper_high(n: int, ip: Fraction) -> Fraction:
    return Fraction(n - 1, 2) - (n - 1) * ip


def hyper_low(n: int, ip: Fraction) -> Fraction:
    return Fraction(n - 1, 4) - Fraction(n - 2, 2) * ip


def lower_dim(n: int, k: int, ip: Fraction) -> Fraction:
    return Fraction(n - 1, 2) - k * ip


def tube_middle(n: int, beta: Fraction, ip: Fraction) -> Fraction:
    """The interpolated exponent beta(n-1)/2 - beta(n+1)/p + 1/p."""
    return beta * Fraction(n - 1, 2) - beta * (n + 1) * ip + ip


def has_log_loss(n: int, k: int, p: Index) -> bool:
    # The L^2 endpoint for codimension-two submanifolds, except curves in
    # three dimensions where the endpoint holds without loss.
    return as_index(p) == 2 and k == n - 2 and (n, k) != (3, 1)


def delta(n: int, k: int, p: Index) -> ExponentResult:
    """Exponent for the whole manifold (k = n) or a k-dimensional submanifold."""
    q = ExponentQuery(n, k, p)
    ip = inverse(q.p)
    bp = breakpoints(n)
    if k == n:
        if q.p >= bp.p_stz:
            e, regime = whole_high(n, ip), Regime.HIGH_P
        else:
            e, regime = whole_low(n, ip), Regime.LOW_P
        return ExponentResult(e, regime, False, Justification.WHOLE_MANIFOLD)
    if k == n - 1:
        if q.p >= bp.p_hyp:
            e, regime = hyper_high(n, ip), Regime.HIGH_P
        else:
            e, regime = hyper_low(n, ip), Regime.LOW_P
        return ExponentResult(e, regime, False, Justification.SUBMANIFOLD_SLAB)
    return ExponentResult(
        lower_dim(n, k, ip), Regime.HIGH_P, has_log_loss(n, k, q.p),
        Justification.SUBMANIFOLD_SLAB,
    )


def clamp_beta(beta: Real) -> tuple[Fraction, Regime | None]:
    """Freeze beta to [1/2, 1]; outside it the estimates do not change."""
    b = as_real(beta)
    if b < HALF:
        return HALF, Regime.CLAMPED_LOW_BETA
    if b > 1:
        return Fraction(1), Regime.CLAMPED_HIGH_BETA
    return b, None


def sigma(n: int, k: int, p: Index, beta: Real) -> ExponentResult:
    """Exponent for the h^beta neighbourhood of a k-dimensional submanifold."""
    q = ExponentQuery(n, k, p, beta)
    if k == n:
        raise DomainError("k=n is the whole manifold; use delta(n, n, p)")
    if k < 1:
        raise DomainError(f"k={k} must be >= 1 for a tubular neighbourhood")
    if q.beta <= 0:
        raise DomainError(f"beta={q.beta} must be > 0")
    b, clamped = clamp_beta(q.beta)
    ip = inverse(q.p)
    bp = breakpoints(n)

    if q.p >= bp.p_stz:
        e, regime, why = whole_high(n, ip), Regime.HIGH_P, Justification.WHOLE_MANIFOLD
    elif k == n - 1:
        if q.p >= bp.p_hyp:
            e, regime, why = tube_middle(n, b, ip), Regime.MIDDLE_P, Justification.INTERPOLATION
        else:
            e = delta(n, k, q.p).exponent - b * ip
            regime, why = Regime.LOW_P, Justification.SUBMANIFOLD_SLAB
    else:
        e, regime = tube_middle(n, b, ip), Regime.LOW_P
        why = Justification.BURQ_ZUILY if q.p == 2 else Justification.INTERPOLATION
    return ExponentResult(e, clamped or regime, has_log_loss(n, k, q.p), why)


def interpolate(point_a: tuple[Real, Real], point_b: tuple[Real, Real], p: Index) -> Fraction:
    """Linear interpolation of an exponent in the variable 1/p.

    Points are ``(1/p, exponent)`` pairs.
    """
    (xa, ya), (xb, yb) = [(as_real(x), as_real(y)) for x, y in (point_a, point_b)]
    if xa == xb:
        raise DomainError("interpolation endpoints must have distinct 1/p")
    x = inverse(p)
    if not min(xa, xb) <= x <= max(xa, xb):
        raise DomainError(f"p={format_index(p)} lies outside the interpolation range")
    t = (x - xa) / (xb - xa)
    return ya + t * (yb - ya)
