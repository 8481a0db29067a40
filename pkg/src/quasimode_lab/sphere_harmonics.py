"""Exact eigenfunctions on S^n built from rotated highest-weight harmonics.

A term is ``(<c, x>)^j`` with ``c = (i, a_2, ..., a_{n+1})``, ``a`` real and of
unit norm, so that ``sum_m c_m^2 = 0`` and the restriction to S^n is an
eigenfunction with eigenvalue ``j(j+n-1) = h^{-2}``.  Sums are built
inductively: stage k rotates every term of stage k-1 in the (x_2, x_{k+1})
plane by the small angles ``arcsin(h^{1/2} s)``.

Coordinates are 0-based in code: ``x[0]`` is x_1 and ``x[k]`` is x_{k+1}.
Angles follow the conversion ``x_{n+1} = cos(phi_n)``, ...,
``x_2 = sin(phi_n)...sin(phi_2) cos(phi_1)``,
``x_1 = sin(phi_n)...sin(phi_2) sin(phi_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import ConstructionError, DomainError, ResolutionError
from .quadrature import PANEL_ORDER, composite_gauss, pairwise_sum

UNDERFLOW = math.log(1e-300)
HARMONICITY_TOL = 1e-12
MIN_NODES_PER_H = 4


def eigen_h(n: int, j: int) -> float:
    """Semiclassical parameter from the degree: ``h = (j(j+n-1))^{-1/2}``."""
    return (j * (j + n - 1)) ** -0.5


def to_cartesian(phi: np.ndarray) -> np.ndarray:
    """Map angles ``(..., n)`` to points ``(..., n+1)`` on S^n."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[-1]
    x = np.empty(phi.shape[:-1] + (n + 1,))
    sines = np.ones(phi.shape[:-1])
    x[..., n] = np.cos(phi[..., n - 1])
    for m in range(n - 1, 0, -1):
        sines = sines * np.sin(phi[..., m])
        x[..., m] = sines * np.cos(phi[..., m - 1])
    x[..., 0] = sines * np.sin(phi[..., 0])
    return x


def volume_element(phi: np.ndarray) -> np.ndarray:
    """``prod_{m>=2} sin(phi_m)^{m-1}``."""
    phi = np.asarray(phi, dtype=float)
    out = np.ones(phi.shape[:-1])
    for m in range(1, phi.shape[-1]):
        out = out * np.sin(phi[..., m]) ** m
    return out


@dataclass(frozen=True)
class SpherePoint:
    angles: tuple
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 1 or len(a) < 1:
            raise DomainError("angles must be a 1-d sequence")
        if not 0 <= a[0] < 2 * math.pi or np.any((a[1:] < 0) | (a[1:] > math.pi)):
            raise DomainError("need phi_1 in [0, 2pi) and phi_m in [0, pi]")
        object.__setattr__(self, "angles", tuple(a.tolist()))
        object.__setattr__(self, "x", to_cartesian(a))


def pole(n: int) -> np.ndarray:
    x = np.zeros(n + 1)
    x[n] = 1.0
    return x


def rotation(s: int, k: int, h: float, n: int) -> np.ndarray:
    """``R_{s,k}``: rotation by ``arcsin(h^{1/2} s)`` in the (x_2, x_{k+1}) plane."""
    if not 2 <= k <= n:
        raise DomainError(f"k={k} must satisfy 2 <= k <= n={n}")
    if h * s * s > 1:
        raise DomainError(f"h s^2 = {h * s * s:.4g} > 1: rotation undefined")
    c, t = math.sqrt(1 - h * s * s), math.sqrt(h) * s
    R = np.eye(n + 1)
    R[1, 1], R[1, k] = c, t
    R[k, 1], R[k, k] = -t, c
    return R


@dataclass(frozen=True)
class HarmonicSum:
    """``scale * h^{prefactor_exponent} * sum_l (i x_1 + a_l . x)^j``.

    ``coeffs`` holds one real row ``a_l`` per term; column 0 (the x_1 slot,
    carrying the implicit ``i``) is zero.
    """

    n: int
    k: int
    j: int
    coeffs: np.ndarray
    alpha: float = 0.5
    epsilon: float = 0.1
    scale: float = 1.0

    def __post_init__(self):
        A = np.array(self.coeffs, dtype=float, ndmin=2)
        if A.shape[1] != self.n + 1:
            raise DomainError("coefficient rows must have length n+1")
        if np.any(A[:, 0] != 0):
            raise DomainError("the x_1 slot is reserved for the imaginary unit")
        A.setflags(write=False)
        object.__setattr__(self, "coeffs", A)

    @property
    def h(self) -> float:
        return eigen_h(self.n, self.j)

    @property
    def eigenvalue(self) -> int:
        return self.j * (self.j + self.n - 1)

    @property
    def prefactor_exponent(self) -> float:
        return -(self.n - 1) / 4 + (0.5 - self.alpha) * (self.k - 1) / 2

    @property
    def prefactor(self) -> float:
        return self.scale * self.h ** self.prefactor_exponent

    @property
    def term_count(self) -> int:
        return len(self.coeffs)

    def complex_coeffs(self) -> np.ndarray:
        c = self.coeffs.astype(complex)
        c[:, 0] = 1j
        return c

    def harmonicity_residuals(self) -> np.ndarray:
        """``|sum_m c_m^2|`` per term; zero exactly for harmonic terms."""
        return np.abs((self.complex_coeffs() ** 2).sum(axis=1))

    def rotated(self, R: np.ndarray) -> "HarmonicSum":
        """``u o R``: ``<c, R x> = <R^T c, x>``, i.e. rows ``c R``."""
        R = np.asarray(R, dtype=float)
        if abs(R[0, 0] - 1) > 1e-15 or np.any(np.abs(R[0, 1:]) > 1e-15) or np.any(np.abs(R[1:, 0]) > 1e-15):
            raise DomainError("rotations must fix the x_1 axis")
        return replace(self, coeffs=self.coeffs @ R)

    def scaled(self, factor: float) -> "HarmonicSum":
        return replace(self, scale=self.scale * factor)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "j": self.j, "alpha": self.alpha,
            "epsilon": self.epsilon, "scale": self.scale,
            "prefactor_exponent": self.prefactor_exponent,
            "terms": [{"re": row.tolist(), "im_x1": True} for row in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HarmonicSum":
        return cls(
            d["n"], d["k"], d["j"], np.array([t["re"] for t in d["terms"]]),
            d["alpha"], d["epsilon"], d.get("scale", 1.0),
        )


def build_u1(n: int, j: int, alpha: float = 0.5, epsilon: float = 0.1) -> HarmonicSum:
    """The base harmonic ``h^{-(n-1)/4} (i x_1 + x_2)^j``."""
    if n < 2:
        raise DomainError(f"n={n} must be >= 2")
    if j < 1:
        raise DomainError(f"j={j} must be >= 1")
    _check_alpha(alpha)
    a = np.zeros(n + 1)
    a[1] = 1.0
    return HarmonicSum(n, 1, j, a[None, :], alpha, epsilon)


def _check_alpha(alpha: float) -> None:
    if not 0 <= alpha <= 0.5:
        raise DomainError(f"alpha={alpha} must lie in [0, 1/2]")


def rotations_per_step(h: float, alpha: float, epsilon: float) -> int:
    """``max(1, ceil(eps h^{alpha - 1/2}))``, used as ``s = 0, ..., S-1``.

    Starting at s = 0 keeps ``h^{1/2} (S-1) < eps h^alpha``.  Later stages
    compound the a_2 defect, so large eps can still fail the bounds there.
    """
    return max(1, int(math.ceil(epsilon * h ** (alpha - 0.5) - 1e-12)))


def coefficient_violations(u: HarmonicSum) -> list[tuple[int, str]]:
    h, eps, a = u.h, u.epsilon, u.alpha
    A = u.coeffs
    out = []
    slack = 1e-14
    for l, row in enumerate(A):
        if abs(1 - row[1] ** 2) > eps * h ** (2 * a) + slack:
            out.append((l, f"|1 - a_2^2| = {abs(1 - row[1] ** 2):.3e} > eps h^(2 alpha)"))
        big = np.abs(row[2:]) > eps * h ** a + slack
        if np.any(big):
            out.append((l, f"|a_m| exceeds eps h^alpha at m = {(np.nonzero(big)[0] + 3).tolist()}"))
        if np.any(row[u.k + 1:] != 0):
            out.append((l, f"nonzero coefficient beyond x_{u.k + 1}"))
    return out


def extend(u_prev: HarmonicSum, alpha: Optional[float] = None) -> HarmonicSum:
    """Stage k from stage k-1: sum of ``u_prev o R_{s,k}`` over ``s = 0..S-1``."""
    alpha = u_prev.alpha if alpha is None else alpha
    _check_alpha(alpha)
    k = u_prev.k + 1
    if k > u_prev.n:
        raise DomainError(f"stage {u_prev.k} is already the final stage n={u_prev.n}")
    h = u_prev.h
    count = rotations_per_step(h, alpha, u_prev.epsilon)
    blocks = []
    for s in range(count):
        R = rotation(s, k, h, u_prev.n)
        blocks.append(u_prev.coeffs @ R)
    u = HarmonicSum(u_prev.n, k, u_prev.j, np.vstack(blocks), alpha, u_prev.epsilon, u_prev.scale)
    bad = coefficient_violations(u)
    if bad:
        l, why = bad[0]
        raise ConstructionError(f"stage {k}, rotation s={l // len(u_prev.coeffs)}, term {l}: {why}")
    return u


def build(n: int, j: int, alpha: float, epsilon: float = 0.1, stage: Optional[int] = None) -> HarmonicSum:
    """u_stage (default u_n) by repeated :func:`extend`."""
    u = build_u1(n, j, alpha, epsilon)
    for _ in range((n if stage is None else stage) - 1):
        u = extend(u)
    return u


def evaluate(u: HarmonicSum, points) -> np.ndarray:
    """Values at Cartesian points ``(P, n+1)`` on S^n, summed in log domain.

    Each term is ``exp(j log<c, x>)``; terms are summed relative to the largest
    log-magnitude at each point, and terms below 1e-300 of it are dropped.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[1] != u.n + 1:
        raise DomainError(f"points must have {u.n + 1} coordinates")
    z = 1j * X[:, :1] + X @ u.coeffs.T
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = u.j * np.log(z)
    top = logs.real.max(axis=1, keepdims=True)
    dead = ~np.isfinite(top[:, 0])
    top[dead] = 0.0
    rel = logs - top
    with np.errstate(invalid="ignore"):
        terms = np.where(rel.real < UNDERFLOW, 0.0, np.exp(rel))
    total = terms.sum(axis=1) * np.exp(top[:, 0])
    total[dead] = 0.0
    return u.prefactor * total


def evaluate_at(u: HarmonicSum, pt: SpherePoint) -> complex:
    return complex(evaluate(u, pt.x[None, :])[0])


@dataclass(frozen=True)
class SphereGrid:
    """Product composite Gauss-Legendre rule in the angles.

    Node spacing is at most ``h / nodes_per_h`` in every angle.  Panels in
    the polar angle on which a rigorous upper bound for the integrand falls
    below ``cutoff`` (relative) are skipped.
    """

    nodes_per_h: float = MIN_NODES_PER_H
    cutoff: float = 1e-30

    def rule(self, lo: float, hi: float, h: float):
        if self.nodes_per_h < MIN_NODES_PER_H:
            raise ResolutionError(
                f"{self.nodes_per_h:g} nodes per h is below the minimum {MIN_NODES_PER_H}"
            )
        panels = max(1, math.ceil((hi - lo) * self.nodes_per_h / h / PANEL_ORDER))
        return composite_gauss(lo, hi, panels), panels


def _polar_bound(u: HarmonicSum, lo: float, hi: float) -> float:
    """Upper bound of ``|u| / prefactor`` over ``phi_2`` in [lo, hi] (n = 2).

    With ``b = e_1 x a`` one has ``|i x_1 + a.x|^2 = 1 - (b.x)^2`` and
    ``|b.x| >= |a_2| |cos phi_2| - |a_3|``.
    """
    cmin = 0.0 if lo <= math.pi / 2 <= hi else min(abs(math.cos(lo)), abs(math.cos(hi)))
    t = np.clip(np.abs(u.coeffs[:, 1]) * cmin - np.abs(u.coeffs[:, 2]), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logs = 0.5 * u.j * np.log1p(-np.minimum(t**2, 1.0))
    return float(np.exp(logs).sum())


def integrate(
    integrand: Callable[[np.ndarray], np.ndarray],
    n: int,
    h: float,
    grid: SphereGrid = SphereGrid(),
    polar_bound: Optional[Callable[[float, float], float]] = None,
) -> complex:
    """``int_{S^n} f dmu`` for ``f`` given on Cartesian points.

    ``polar_bound(lo, hi)`` (n = 2 only) bounds ``|f|`` on a polar panel,
    relative to the bound's value on the panel containing the equator.
    """
    if n not in (2, 3):
        raise DomainError(f"sphere quadrature supports n in {{2, 3}}, got {n}")
    (p1, w1), _ = grid.rule(0.0, 2 * math.pi, h)
    rules = [grid.rule(0.0, math.pi, h) for _ in range(n - 1)]
    if n == 2:
        (p2, w2), panels = rules[0]
        edges = np.linspace(0.0, math.pi, panels + 1)
        peak = polar_bound(math.pi / 2, math.pi / 2) if polar_bound else None
        parts = []
        for i in range(panels):
            if polar_bound is not None and polar_bound(edges[i], edges[i + 1]) <= grid.cutoff * peak:
                continue
            sl = slice(i * PANEL_ORDER, (i + 1) * PANEL_ORDER)
            ang = np.stack(np.meshgrid(p1, p2[sl], indexing="ij"), axis=-1).reshape(-1, 2)
            wts = np.outer(w1, w2[sl] * np.sin(p2[sl])).ravel()
            parts.append(integrand(to_cartesian(ang)) * wts)
        vals = np.concatenate(parts) if parts else np.zeros(1)
    else:
        (p2, w2), _ = rules[0]
        (p3, w3), _ = rules[1]
        parts = []
        for m in range(len(p3)):
            ang = np.stack(np.meshgrid(p1, p2, [p3[m]], indexing="ij"), axis=-1).reshape(-1, 3)
            wts = np.outer(w1, w2 * np.sin(p2)).ravel() * w3[m] * np.sin(p3[m]) ** 2
            parts.append(integrand(to_cartesian(ang)) * wts)
        vals = np.concatenate(parts)
    return complex(pairwise_sum(vals.real) + 1j * pairwise_sum(vals.imag))


def _weight(u: HarmonicSum, X: np.ndarray, weight_exponent: Optional[float]) -> np.ndarray | float:
    if weight_exponent is None:
        return 1.0
    tail = (X[:, u.k + 1:] ** 2).sum(axis=1)
    return (1 + u.h * tail) ** weight_exponent


def l2_norm(u: HarmonicSum, grid: SphereGrid = SphereGrid(), weight_exponent: Optional[float] = None) -> float:
    """``||w u||_{L^2(S^n)}``; the optional weight is ``(1 + h(x_{k+2}^2 + ...))^{weight_exponent}``."""
    def f(X):
        return np.abs(_weight(u, X, weight_exponent) * evaluate(u, X)) ** 2

    bound = _band_bound([u], 2, weight_exponent) if u.n == 2 else None
    return math.sqrt(integrate(f, u.n, u.h, grid, bound).real)


def _band_bound(parts, power, weight_exponent=None):
    def bound(lo, hi):
        value = 1.0
        for u in parts:
            value *= _polar_bound(u, lo, hi)
        if len(parts) == 1:
            value = value**power
        return value

    # A weight lies in [1, (1 + h)^{|w|}] up to inversion, so it cannot lift a
    # panel across a 1e-30 relative cutoff.
    return bound


def wallis_norm_u1(j: int, h: float) -> float:
    """Exact ``||u_1||`` on S^2: ``h^{-1/2} 2 pi int_0^pi sin^{2j+1}``."""
    log_int = 0.5 * math.log(math.pi) + gammaln(j + 1) - gammaln(j + 1.5)
    return math.sqrt(h ** -0.5 * 2 * math.pi * math.exp(log_int))


def pair_correlation(u: HarmonicSum, s: int, s_prime: int, k: int, grid: SphereGrid = SphereGrid()) -> float:
    """``|int (u o R_{s,k}) conj(u o R_{s',k}) dmu|``."""
    f = u.rotated(rotation(s, k, u.h, u.n))
    g = u.rotated(rotation(s_prime, k, u.h, u.n))

    def integrand(X):
        return evaluate(f, X) * np.conj(evaluate(g, X))

    bound = _band_bound([f, g], 1) if u.n == 2 else None
    return abs(integrate(integrand, u.n, u.h, grid, bound))


def concentration_center(n: int) -> np.ndarray:
    """Angles of ``(1, 0, ..., 0)``, the point fixed by every rotation."""
    return np.full(n, math.pi / 2)


def concentration_check(u: HarmonicSum, eps_region: float = 0.1, samples: int = 9) -> float:
    """``min |u|`` on the concentration box, times ``h^{(n-1)(1-alpha)/2}``.

    The box is ``eps h^{1-2 alpha}`` in phi_1 and ``eps h^{1-alpha}`` in the
    other angles around (1, 0, ..., 0).
    """
    if u.k != u.n:
        raise DomainError(f"concentration needs the final stage k=n, got k={u.k}")
    if eps_region <= 0:
        raise DomainError("eps_region must be positive")
    h, a, n = u.h, u.alpha, u.n
    widths = [eps_region * h ** (1 - 2 * a)] + [eps_region * h ** (1 - a)] * (n - 1)
    ticks = [c + np.linspace(-w, w, samples) for c, w in zip(concentration_center(n), widths)]
    ang = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, n)
    vals = evaluate(u, to_cartesian(ang))
    return float(np.abs(vals).min()) * h ** ((n - 1) * (1 - a) / 2)


def spherical_laplacian_fd(u: HarmonicSum, points: np.ndarray, step: float = 2e-3) -> np.ndarray:
    """Positive Laplace-Beltrami of u at points on S^n by finite differences.

    Uses the degree-0 homogeneous extension ``u(x / |x|)``, whose Euclidean
    Laplacian on the sphere equals the spherical one, with a fourth-order
    central stencil in each ambient coordinate.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))

    def F(Y):
        return evaluate(u, Y / np.linalg.norm(Y, axis=1, keepdims=True))

    lap = -30 * F(X) * (u.n + 1)
    for m in range(u.n + 1):
        e = np.zeros(u.n + 1)
        e[m] = step
        lap = lap + 16 * (F(X + e) + F(X - e)) - (F(X + 2 * e) + F(X - 2 * e))
    return -lap / (12 * step**2)
