"""Which concentration scale alpha produces sharp examples.

Two independent routes are implemented and cross-checked:

* an explicit optimiser: :func:`tube_exponent` is the exponent of the lower
  bound for ``||T_alpha||_{L^p(Sigma_beta)}`` when the tube's long axis lies
  in the submanifold, and :func:`predict_alpha` maximises it over alpha;
* the kernel-decay heuristic: the TT* kernel decays like
  ``(h + |t-s|)^{-gamma_p}`` and the sign of ``gamma_p p / 2 - 1`` decides
  whether the smallest or the largest propagation time dominates.  Time
  ``|t-s| = h^{1-2 alpha}`` corresponds to the example ``T_alpha``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConsistencyError, DomainError
from .exponents import (
    HALF,
    Index,
    Real,
    as_index,
    as_real,
    clamp_beta,
    format_index,
    inverse,
    sigma,
)

DEFAULT_STEP = Fraction(1, 1024)
TIE_TOL = 1e-9


class Contribution(str, enum.Enum):
    SMALLEST_SCALE = "smallest_scale"
    LARGEST_SCALE = "largest_scale"
    ALL_SCALES = "all_scales"


class CaseLabel(str, enum.Enum):
    T0_POINT = "T0_point"
    THALF_TUBE = "Thalf_tube"
    T_ONE_MINUS_BETA = "T_one_minus_beta"
    ALL_SCALES_CRITICAL = "all_scales_critical"


@dataclass(frozen=True)
class ScaleQuery:
    n: int
    k: int
    p: Fraction | float
    beta: Fraction
    alpha_step: Fraction = DEFAULT_STEP

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n={self.n} must be an integer >= 2")
        if not 1 <= self.k <= self.n - 1:
            raise DomainError(f"k={self.k} must satisfy 1 <= k <= n-1")
        p = as_index(self.p)
        if p < 2:
            raise DomainError(f"p={format_index(p)} must satisfy p >= 2")
        object.__setattr__(self, "p", p)
        b = as_real(self.beta)
        if b <= 0:
            raise DomainError(f"beta={b} must be > 0")
        object.__setattr__(self, "beta", clamp_beta(b)[0])
        step = as_real(self.alpha_step)
        if not 0 < step <= HALF:
            raise DomainError(f"alpha_step={step} must lie in (0, 1/2]")
        object.__setattr__(self, "alpha_step", step)


@dataclass(frozen=True)
class Prediction:
    alpha_star: tuple[tuple[float, float], ...]
    exponent_at_max: float
    case_label: CaseLabel
    alpha_case: Fraction
    critical_time_scale: Fraction
    expected: tuple[Fraction, Fraction] = field(repr=False)

    def contains(self, alpha: float, tol: float = 1e-12) -> bool:
        return any(lo - tol <= alpha <= hi + tol for lo, hi in self.alpha_star)


@dataclass(frozen=True)
class DecayProfile:
    """Exponents of ``h^{-kappa} (h + tau)^{-gamma}`` kernel bounds."""

    kappa_inf: Fraction
    gamma_inf: Fraction
    kappa_2: Fraction
    gamma_2: Fraction
    tau: float

    def gamma_p(self, p: Index) -> Fraction:
        # L^{p'} -> L^p by interpolating L^2 -> L^2 (1/p = 1/2) with
        # L^1 -> L^inf (1/p = 0).
        theta = 1 - 2 * inverse(p)
        return theta * self.gamma_inf + (1 - theta) * self.gamma_2


def tube_exponent(n: int, k: int, p: Index, beta: Real, alpha: Real) -> float:
    """Lower-bound exponent E(alpha) for an aligned T_alpha on Sigma_beta.

    Amplitude ``h^{-(n-1)(1-alpha)/2}`` on a box ``h^{1-2alpha}`` long (in the
    submanifold) and ``h^{1-alpha}`` wide; the ``n-k`` normal widths are cut
    down to ``h^beta`` when the tube is wider than the neighbourhood.
    """
    a = float(alpha)
    if not 0 <= a <= 0.5:
        raise DomainError(f"alpha={alpha} must lie in [0, 1/2]")
    ip = float(inverse(p))
    b = float(beta)
    volume = (1 - 2 * a) + (1 - a) * (k - 1) + (n - k) * max(1 - a, b)
    return (n - 1) * (1 - a) / 2 - volume * ip


def tube_exponent_exact(n: int, k: int, p: Index, beta: Real, alpha: Real) -> Fraction:
    """Same as :func:`tube_exponent` in exact rational arithmetic."""
    a, b, ip = as_real(alpha), as_real(beta), inverse(p)
    if not 0 <= a <= HALF:
        raise DomainError(f"alpha={alpha} must lie in [0, 1/2]")
    volume = (1 - 2 * a) + (1 - a) * (k - 1) + (n - k) * max(1 - a, b)
    return Fraction(n - 1, 2) * (1 - a) - volume * ip


def contribution_regime(gamma_p: Real, p: Index) -> Contribution:
    """Where the propagation-time integral of ``(h + tau)^{-gamma_p p/2}`` lives."""
    q = as_index(p)
    g = as_real(gamma_p)
    if g < 0:
        raise DomainError(f"gamma_p={g} must be >= 0")
    if q < 2:
        raise DomainError(f"p={format_index(q)} must satisfy p >= 2")
    if q == math.inf:
        return Contribution.SMALLEST_SCALE if g > 0 else Contribution.ALL_SCALES
    power = g * q / 2
    if power > 1:
        return Contribution.SMALLEST_SCALE
    if power < 1:
        return Contribution.LARGEST_SCALE
    return Contribution.ALL_SCALES


def decay_profile(n: int, k: int, beta: Real, h: float, tau: float) -> DecayProfile:
    """Kernel exponents for ``L^2(M) -> L^p(Sigma_beta)`` at time separation tau."""
    b = clamp_beta(beta)[0]
    dispersive = Fraction(n - 1, 2)
    if tau <= h ** float(2 * b - 1):
        k2, g2 = Fraction(0), Fraction(0)
    else:
        k2, g2 = Fraction(n - k, 2) * (1 - b), Fraction(n - k, 2)
    return DecayProfile(dispersive, dispersive, k2, g2, float(tau))


def kernel_l2_bound(n: int, k: int, beta: Real, h: float, tau: float) -> float:
    """Heuristic L^2(Sigma_beta) -> L^2(Sigma_beta) norm of the TT* kernel.

    The two regimes are discontinuous at ``tau = h^{2 beta - 1}``.
    """
    if not 0 < h < 1:
        raise DomainError(f"h={h} must lie in (0, 1)")
    if tau < 0:
        raise DomainError(f"tau={tau} must be >= 0")
    b = float(clamp_beta(beta)[0])
    if tau <= h ** (2 * b - 1):
        return 1.0
    c = (n - k) / 2
    return h ** (-c + b * c) * (h + tau) ** (-c)


def case_table(n: int, k: int, p: Index, beta: Real) -> tuple[Fraction, Fraction]:
    """Expected interval of sharp alpha from the kernel-decay heuristic.

    For ``tau <= h^{2 beta - 1}`` the kernel behaves as on the whole manifold,
    beyond it as on the k-dimensional submanifold.  Walking tau upward from h:
    if the first regime already favours the smallest time the point example
    T_0 wins; otherwise the contribution grows up to the switch time
    ``h^{2 beta - 1}`` (alpha = 1 - beta), after which the submanifold regime
    decides whether it keeps growing up to tau ~ 1 (alpha = 1/2).
    """
    b = clamp_beta(beta)[0]
    switch = 1 - b
    whole = Fraction(n - 1, 2) * (1 - 2 * inverse(p))
    sub = whole + 2 * inverse(p) * Fraction(n - k, 2)
    r1 = contribution_regime(whole, p)
    r2 = contribution_regime(sub, p)

    if r1 is Contribution.SMALLEST_SCALE:
        return Fraction(0), Fraction(0)
    lo = Fraction(0) if r1 is Contribution.ALL_SCALES else switch
    if switch == HALF or r2 is Contribution.ALL_SCALES:
        return lo, HALF
    if r2 is Contribution.SMALLEST_SCALE:
        return lo, switch
    return HALF, HALF


def representative_alpha(n: int, k: int, p: Index, beta: Real) -> Fraction:
    """The single sharp example named by the case table.

    T_0 for p >= p_stz, T_{1/2} for hypersurfaces below 2n/(n-1), T_{1-beta}
    otherwise.
    """
    lo, _ = case_table(n, k, p, beta)
    if lo in (0, HALF):
        return lo
    return 1 - clamp_beta(beta)[0]


def _label(intervals, tol: float) -> CaseLabel:
    if len(intervals) == 1:
        lo, hi = intervals[0]
        if hi - lo > tol:
            return CaseLabel.ALL_SCALES_CRITICAL
        if abs(lo) <= tol:
            return CaseLabel.T0_POINT
        if abs(lo - 0.5) <= tol:
            return CaseLabel.THALF_TUBE
    return CaseLabel.T_ONE_MINUS_BETA


def alpha_grid(step: Fraction, beta: Fraction) -> np.ndarray:
    """Uniform grid on [0, 1/2] plus the kink alpha = 1 - beta."""
    count = int(math.ceil(HALF / step))
    grid = np.linspace(0.0, 0.5, count + 1)
    return np.unique(np.append(grid, float(1 - beta)))


def exponent_curve(query: ScaleQuery) -> tuple[np.ndarray, np.ndarray]:
    n, k, b = query.n, query.k, float(query.beta)
    alphas = alpha_grid(query.alpha_step, query.beta)
    volume = (1 - 2 * alphas) + (1 - alphas) * (k - 1) + (n - k) * np.maximum(1 - alphas, b)
    values = (n - 1) * (1 - alphas) / 2 - volume * float(inverse(query.p))
    return alphas, values


def _argmax_intervals(alphas: np.ndarray, values: np.ndarray) -> list[tuple[float, float]]:
    best = values.max()
    hit = values >= best - TIE_TOL
    intervals = []
    i = 0
    while i < len(alphas):
        if hit[i]:
            j = i
            while j + 1 < len(alphas) and hit[j + 1]:
                j += 1
            intervals.append((float(alphas[i]), float(alphas[j])))
            i = j + 1
        else:
            i += 1
    return intervals


def predict_alpha(query: ScaleQuery) -> Prediction:
    """Maximise E(alpha) on the grid and cross-check against the case table.

    Raises :class:`ConsistencyError` when the optimiser's argmax set and the
    heuristic's interval differ by more than one grid step.
    """
    alphas, values = exponent_curve(query)
    intervals = _argmax_intervals(alphas, values)
    step = float(query.alpha_step)
    lo, hi = case_table(query.n, query.k, query.p, query.beta)

    if len(intervals) != 1 or not (
        abs(intervals[0][0] - float(lo)) <= step and abs(intervals[0][1] - float(hi)) <= step
    ):
        raise ConsistencyError(
            f"argmax {intervals} disagrees with case table [{lo}, {hi}] at "
            f"n={query.n} k={query.k} p={format_index(query.p)} beta={query.beta}"
        )
    best = float(values.max())
    alpha_case = representative_alpha(query.n, query.k, query.p, query.beta)
    return Prediction(
        alpha_star=tuple(intervals),
        exponent_at_max=best,
        case_label=_label(intervals, step / 2),
        alpha_case=alpha_case,
        critical_time_scale=1 - 2 * alpha_case,
        expected=(lo, hi),
    )


def check_against_sigma(query: ScaleQuery, tol: float = 1e-3) -> float:
    """Return |max E - sigma|, raising if it exceeds ``tol``."""
    pred = predict_alpha(query)
    target = float(sigma(query.n, query.k, query.p, query.beta).exponent)
    gap = abs(pred.exponent_at_max - target)
    if gap > tol:
        raise ConsistencyError(
            f"max_alpha E = {pred.exponent_at_max} but sigma = {target}"
        )
    return gap
