"""Flat-model quasimodes T_alpha by quadrature of a semiclassical Fourier integral.

``T_alpha`` is the inverse semiclassical Fourier transform of the indicator of
an ``h x (h^alpha)^{n-1}`` cap of the unit sphere, scaled to unit L^2 norm up
to a bounded constant::

    T(x) = (2 pi h)^{-n/2} h^{-1/2 - alpha(n-1)/2}
           * integral over {|r-1| < h, angle(omega, omega0) < h^alpha}
             of exp(i <x, xi> / h) d xi

The integral is taken in polar (n=2) or spherical (n=3) coordinates about
``omega0`` with composite Gauss-Legendre rules sized by the phase variation
over the evaluation points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BudgetError, DomainError
from .quadrature import PANEL_ORDER, composite_gauss, oscillation_nodes

NODES_PER_PERIOD = 8
DEFAULT_NODE_BUDGET = 2_000_000
NODE_BLOCK = 2048
POINT_BLOCK = 4096
DEFAULT_SAMPLE_BUDGET = 16_000_000


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """The map ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or t.shape != (R.shape[0],):
            raise DomainError("rotation must be n x n and translation length n")
        if not np.allclose(R.T @ R, np.eye(len(t)), atol=1e-12, rtol=0):
            raise DomainError("rotation matrix is not orthogonal to 1e-12")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls, n: int) -> "RigidMotion":
        return cls(np.eye(n), np.zeros(n))

    @property
    def dim(self) -> int:
        return len(self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def inverse(self) -> "RigidMotion":
        Rt = self.rotation.T
        return RigidMotion(Rt, -Rt @ self.translation)

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """``self`` after ``other``."""
        return RigidMotion(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RigidMotion":
        return cls(np.array(d["rotation"]), np.array(d["translation"]))


def rotation_2d(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def frame_from_direction(direction) -> np.ndarray:
    """Orthonormal basis (as columns) whose first vector is ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    n = len(d)
    if n == 2:
        return np.column_stack([d, [-d[1], d[0]]])
    # Householder reflection taking e1 to d; sign fixed so det = +1.
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = e1 - d
    if np.linalg.norm(v) < 1e-14:
        return np.eye(n)
    H = np.eye(n) - 2 * np.outer(v, v) / (v @ v)
    if np.linalg.det(H) < 0:
        H[:, -1] *= -1
    return H


@dataclass(frozen=True)
class SpectralCap:
    """Fourier-side descriptor of T_alpha.

    The support is ``{|r - 1| < h, angle(omega, omega0) < epsilon_cap * h^alpha}``
    with the geodesic angle on the sphere of directions.
    """

    n: int
    h: float
    alpha: float
    omega0: tuple = None
    epsilon_cap: float = 1.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"n={self.n}: field evaluation supports n in {{2, 3}}")
        if not 0 < self.h < 1:
            raise DomainError(f"h={self.h} must lie in (0, 1)")
        if not 0 <= self.alpha <= 0.5:
            raise DomainError(f"alpha={self.alpha} must lie in [0, 1/2]")
        if self.epsilon_cap <= 0:
            raise DomainError("epsilon_cap must be positive")
        w = np.zeros(self.n)
        w[0] = 1.0
        if self.omega0 is not None:
            w = np.asarray(self.omega0, dtype=float)
            if w.shape != (self.n,) or not np.isclose(np.linalg.norm(w), 1.0, atol=1e-12):
                raise DomainError("omega0 must be a unit vector in R^n")
        object.__setattr__(self, "omega0", tuple(float(c) for c in w))
        if self.half_angle >= math.pi:
            raise DomainError("cap half-angle must be below pi")

    @property
    def amplitude(self) -> float:
        return self.h ** (-0.5 - self.alpha * (self.n - 1) / 2)

    @property
    def half_angle(self) -> float:
        return self.epsilon_cap * self.h ** self.alpha

    @property
    def frame(self) -> np.ndarray:
        return frame_from_direction(self.omega0)

    def volume(self) -> float:
        """Exact Lebesgue measure of the support."""
        h, w = self.h, self.half_angle
        if self.n == 2:
            return 2 * h * 2 * w
        radial = ((1 + h) ** 3 - (1 - h) ** 3) / 3
        return radial * 2 * math.pi * (1 - math.cos(w))

    def l2_norm(self) -> float:
        """Exact ``||f||_{L^2}``, which equals ``||T||_{L^2(R^n)}``."""
        return self.amplitude * math.sqrt(self.volume())

    def to_dict(self) -> dict:
        return {
            "n": self.n, "h": self.h, "alpha": self.alpha,
            "omega0": list(self.omega0), "epsilon_cap": self.epsilon_cap,
        }


def defect_bound(cap: SpectralCap) -> float:
    """sup of ``||xi|^2 - 1|`` over the support, i.e. ``2h + h^2``."""
    return (1 + cap.h) ** 2 - 1


@dataclass(frozen=True)
class QuadratureRule:
    xi: np.ndarray
    weights: np.ndarray
    radial: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)


def quadrature_rule(
    cap: SpectralCap,
    reach: float,
    per_period: float = NODES_PER_PERIOD,
    budget: int = DEFAULT_NODE_BUDGET,
) -> QuadratureRule:
    """Nodes on the cap, sized for points with ``|x| <= reach``.

    Across the angular width the phase ``<x, xi>/h`` varies by at most
    ``reach * width / h`` and across the radial width ``2h`` by
    ``2 * reach``; each direction gets ``per_period`` nodes per 2*pi.
    Weights include the Jacobian, the amplitude and ``(2 pi h)^{-n/2}``.
    """
    h, n, w = cap.h, cap.n, cap.half_angle
    reach = max(float(reach), 0.0)
    nr = oscillation_nodes(2 * reach, per_period)
    r, wr = composite_gauss(1 - h, 1 + h, nr)
    E = cap.frame
    scale = cap.amplitude * (2 * math.pi * h) ** (-n / 2)

    if n == 2:
        nt = oscillation_nodes(reach * 2 * w / h, per_period)
        _check_budget(nr * nt * PANEL_ORDER**2, budget, reach)
        th, wt = composite_gauss(-w, w, nt)
        dirs = np.outer(np.cos(th), E[:, 0]) + np.outer(np.sin(th), E[:, 1])
        xi = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
        weights = (wr * r)[:, None] * wt[None, :]
        radial = np.repeat(r, len(th))
    else:
        npsi = oscillation_nodes(reach * w / h, per_period)
        nphi = oscillation_nodes(reach * 2 * math.pi * math.sin(min(w, math.pi / 2)) / h, per_period)
        _check_budget(nr * npsi * nphi * PANEL_ORDER**3, budget, reach)
        psi, wpsi = composite_gauss(0.0, w, npsi)
        phi, wphi = composite_gauss(0.0, 2 * math.pi, nphi)
        sp = np.sin(psi)
        dirs = (
            np.cos(psi)[:, None, None] * E[:, 0]
            + (sp[:, None] * np.cos(phi)[None, :])[:, :, None] * E[:, 1]
            + (sp[:, None] * np.sin(phi)[None, :])[:, :, None] * E[:, 2]
        ).reshape(-1, 3)
        ang_w = ((wpsi * sp)[:, None] * wphi[None, :]).ravel()
        xi = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        weights = (wr * r**2)[:, None] * ang_w[None, :]
        radial = np.repeat(r, len(ang_w))
    return QuadratureRule(xi, (weights.ravel() * scale), radial)


def _check_budget(nodes: int, budget: int, reach: float) -> None:
    if nodes > budget:
        raise BudgetError(
            f"resolving |x| <= {reach:.4g} needs {nodes} quadrature nodes "
            f"(budget {budget}); shrink the evaluation region or raise the budget"
        )


def _moved_rule(rule: QuadratureRule, motion: Optional[RigidMotion], h: float,
                multiplier: Optional[Callable[[np.ndarray], np.ndarray]]):
    xi, weights = rule.xi, rule.weights.astype(complex)
    if multiplier is not None:
        weights = weights * multiplier(rule.radial)
    if motion is not None:
        xi = xi @ motion.rotation.T
        weights = weights * np.exp(-1j / h * (xi @ motion.translation))
    return xi, weights


def _reach(points: np.ndarray, motion: Optional[RigidMotion]) -> float:
    if len(points) == 0:
        return 0.0
    shift = points if motion is None else points - motion.translation
    return float(np.sqrt((shift**2).sum(axis=1)).max())


def evaluate(
    cap: SpectralCap,
    points,
    motion: Optional[RigidMotion] = None,
    *,
    per_period: float = NODES_PER_PERIOD,
    budget: int = DEFAULT_NODE_BUDGET,
    multiplier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Values of the (moved) quasimode at ``points``.

    With a motion ``M`` the field is ``x -> T(M^{-1} x)``.  ``multiplier`` is
    a function of ``|xi|`` applied on the Fourier side before inversion.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return np.zeros(0, dtype=complex)
    if pts.shape[1] != cap.n:
        raise DomainError(f"points must have {cap.n} coordinates")
    rule = quadrature_rule(cap, _reach(pts, motion), per_period, budget)
    xi, weights = _moved_rule(rule, motion, cap.h, multiplier)
    out = np.zeros(len(pts), dtype=complex)
    for i in range(0, len(pts), POINT_BLOCK):
        chunk = pts[i:i + POINT_BLOCK]
        acc = np.zeros(len(chunk), dtype=complex)
        for j in range(0, len(weights), NODE_BLOCK):
            phase = np.exp(1j / cap.h * (chunk @ xi[j:j + NODE_BLOCK].T))
            acc += phase @ weights[j:j + NODE_BLOCK]
        out[i:i + POINT_BLOCK] = acc
    return out


@dataclass
class SampledField:
    """Complex samples on ``origin + index * step`` (row-major, axis 0 first)."""

    origin: tuple
    step: tuple
    count: tuple
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.origin = tuple(float(v) for v in self.origin)
        self.step = tuple(float(v) for v in self.step)
        self.count = tuple(int(v) for v in self.count)
        if min(self.count) <= 0:
            raise DomainError("grid counts must be positive")
        self.values = np.asarray(self.values, dtype=complex).reshape(self.count)

    def axes(self) -> list[np.ndarray]:
        return grid_axes(self.origin, self.step, self.count)


def grid_axes(origin: Sequence[float], step: Sequence[float], count: Sequence[int]) -> list[np.ndarray]:
    return [o + s * np.arange(c) for o, s, c in zip(origin, step, count)]


def evaluate_grid(
    cap: SpectralCap,
    origin: Sequence[float],
    step: Sequence[float],
    count: Sequence[int],
    motion: Optional[RigidMotion] = None,
    *,
    per_period: float = NODES_PER_PERIOD,
    budget: int = DEFAULT_NODE_BUDGET,
    multiplier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SampledField:
    """Evaluate on a rectangular lattice using the tensor structure of the phase.

    ``exp(i<x, xi>/h)`` factorises over coordinates, so the quadrature sum is a
    product of per-axis phase matrices.  Node blocks are accumulated in a
    fixed order.
    """
    axes = grid_axes(origin, step, count)
    if len(axes) != cap.n:
        raise DomainError(f"grid must have {cap.n} axes")
    samples = math.prod(int(c) for c in count)
    if samples > DEFAULT_SAMPLE_BUDGET:
        raise BudgetError(
            f"grid has {samples} samples (budget {DEFAULT_SAMPLE_BUDGET}); "
            "shrink the region or coarsen points_per_h"
        )
    corners = np.array(np.meshgrid(*[[a[0], a[-1]] for a in axes], indexing="ij")).reshape(cap.n, -1).T
    rule = quadrature_rule(cap, _reach(corners, motion), per_period, budget)
    xi, weights = _moved_rule(rule, motion, cap.h, multiplier)
    h = cap.h
    values = np.zeros(tuple(count), dtype=complex)
    for j in range(0, len(weights), NODE_BLOCK):
        blk = slice(j, j + NODE_BLOCK)
        wb = weights[blk]
        e0 = np.exp(1j / h * np.outer(axes[0], xi[blk, 0]))
        e1 = np.exp(1j / h * np.outer(xi[blk, 1], axes[1]))
        if cap.n == 2:
            values += (e0 * wb) @ e1
        else:
            e2 = np.exp(1j / h * np.outer(axes[2], xi[blk, 2]))
            for m in range(len(axes[2])):
                values[:, :, m] += (e0 * (wb * e2[m])) @ e1
    meta = {
        "cap": cap.to_dict(),
        "motion": None if motion is None else motion.to_dict(),
        "nodes": rule.size,
        "multiplier": multiplier is not None,
    }
    return SampledField(origin, step, count, values, meta)


@dataclass(frozen=True)
class Box:
    """``{center + axes @ u : |u_i| < half_widths[i]}``; axes are columns."""

    center: np.ndarray
    axes: np.ndarray
    half_widths: np.ndarray

    def lattice(self, samples: int) -> np.ndarray:
        """``samples`` points per axis spanning the closed box."""
        ticks = [np.linspace(-w, w, samples) for w in self.half_widths]
        u = np.array(np.meshgrid(*ticks, indexing="ij")).reshape(len(ticks), -1).T
        return self.center + u @ self.axes.T


def tube_region(cap: SpectralCap, eps: float, motion: Optional[RigidMotion] = None) -> Box:
    """Box of non-oscillation: ``eps h^{1-2a}`` along omega0, ``eps h^{1-a}`` across."""
    if not 0 < eps < 1:
        raise DomainError(f"eps={eps} must lie in (0, 1)")
    h, a = cap.h, cap.alpha
    widths = np.full(cap.n, eps * h ** (1 - a))
    widths[0] = eps * h ** (1 - 2 * a)
    center, axes = np.zeros(cap.n), cap.frame
    if motion is not None:
        center, axes = motion.translation.copy(), motion.rotation @ axes
    return Box(center, axes, widths)


def tube_constant(cap: SpectralCap) -> float:
    """Exponent-normalising factor ``h^{(n-1)(1-alpha)/2}``."""
    return cap.h ** ((cap.n - 1) * (1 - cap.alpha) / 2)


def verify_tube_bound(
    cap: SpectralCap,
    eps: float = 0.1,
    samples: int = 9,
    motion: Optional[RigidMotion] = None,
    **kwargs,
) -> float:
    """``min |T|`` over a lattice in the tube, times ``h^{(n-1)(1-alpha)/2}``."""
    if not 0 < eps <= 0.1:
        raise DomainError(f"eps={eps} must lie in (0, 0.1]")
    pts = tube_region(cap, eps, motion).lattice(samples)
    vals = evaluate(cap, pts, motion, **kwargs)
    return float(np.abs(vals).min()) * tube_constant(cap)


def center_value(cap: SpectralCap) -> float:
    """Exact ``T(0)``: the phase is 1, leaving amplitude * volume / (2 pi h)^{n/2}."""
    return cap.amplitude * cap.volume() * (2 * math.pi * cap.h) ** (-cap.n / 2)
