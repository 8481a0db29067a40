"""L^p norms of flat-model quasimodes over shrinking tubular neighbourhoods.

The ambient "manifold" is the unit box centred on a flat k-plane.  For the
plane ``{z = 0}`` (``x = (y, z)``, ``y`` in R^k) the neighbourhood
``Sigma_beta`` is ``{|y|_inf <= 1/2, |z|_inf <= h^beta}``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, ResolutionError
from .exponents import as_index, as_real, format_index
from .flat_quasimode import (
    DEFAULT_NODE_BUDGET,
    RigidMotion,
    SampledField,
    SpectralCap,
    evaluate_grid,
)
from .quadrature import pairwise_sum
from .scale_predictor import ScaleQuery, representative_alpha

MIN_POINTS_PER_H = 4


@dataclass(frozen=True)
class FlatSubmanifold:
    """The image of ``{z = 0}`` under ``frame``; its first tangent is ``frame(e_1)``."""

    n: int
    k: int
    frame: RigidMotion = None

    def __post_init__(self):
        if not 1 <= self.k <= self.n - 1:
            raise DomainError(f"k={self.k} must satisfy 1 <= k <= n-1")
        if self.frame is None:
            object.__setattr__(self, "frame", RigidMotion.identity(self.n))
        elif self.frame.dim != self.n:
            raise DomainError("frame dimension does not match n")

    @property
    def tangent(self) -> np.ndarray:
        return self.frame.rotation[:, 0].copy()


@dataclass(frozen=True)
class TubularNeighborhood:
    submanifold: FlatSubmanifold
    beta: float
    h: float
    extent: float = 0.5

    def __post_init__(self):
        if not 0 < self.h < 1:
            raise DomainError(f"h={self.h} must lie in (0, 1)")
        if self.extent <= 0:
            raise DomainError("region is empty: extent must be positive")
        if self.beta < 0:
            raise DomainError(f"beta={self.beta} must be >= 0")

    @property
    def half_widths(self) -> list[float]:
        k, n = self.submanifold.k, self.submanifold.n
        normal = min(self.h ** self.beta, self.extent)
        return [self.extent] * k + [normal] * (n - k)

    def volume(self) -> float:
        return float(np.prod([2 * w for w in self.half_widths]))

    @property
    def label(self) -> str:
        return f"Sigma_beta(n={self.submanifold.n},k={self.submanifold.k},beta={self.beta:g})"


def unit_box(n: int, h: float) -> TubularNeighborhood:
    """The whole ambient box, as a degenerate neighbourhood (beta = 0)."""
    return TubularNeighborhood(FlatSubmanifold(n, n - 1), 0.0, h, 0.5)


@dataclass(frozen=True)
class GridSpec:
    """Midpoint lattice with step at most ``h / points_per_h`` on each axis."""

    points_per_h: float = MIN_POINTS_PER_H
    per_period: float = 8.0
    budget: int = DEFAULT_NODE_BUDGET

    def lattice(self, half_widths: Sequence[float], h: float):
        if self.points_per_h < MIN_POINTS_PER_H:
            raise ResolutionError(
                f"grid step h/{self.points_per_h:g} is coarser than h/{MIN_POINTS_PER_H}"
            )
        target = h / self.points_per_h
        count = [max(1, int(math.ceil(2 * w / target))) for w in half_widths]
        step = [2 * w / c for w, c in zip(half_widths, count)]
        origin = [-w + s / 2 for w, s in zip(half_widths, step)]
        return origin, step, count


def sample_region(
    cap: SpectralCap,
    region: TubularNeighborhood,
    grid: GridSpec = GridSpec(),
    motion: Optional[RigidMotion] = None,
) -> SampledField:
    """Samples of the moved field on the region's midpoint lattice, in (y, z) coordinates."""
    if cap.n != region.submanifold.n:
        raise DomainError("cap and region dimensions differ")
    origin, step, count = grid.lattice(region.half_widths, region.h)
    frame = region.submanifold.frame
    local = frame.inverse() if motion is None else frame.inverse().compose(motion)
    return evaluate_grid(
        cap, origin, step, count, local, per_period=grid.per_period, budget=grid.budget,
    )


def sampled_lp_norm(values: np.ndarray, cell_volume: float, p) -> float:
    """Midpoint-rule L^p norm of samples; p = inf gives the sample maximum."""
    q = as_index(p)
    mag = np.abs(np.asarray(values)).ravel()
    if mag.size == 0:
        raise DomainError("region is empty")
    if q == math.inf:
        return float(mag.max())
    if q < 1:
        raise DomainError(f"p={format_index(q)} must be >= 1")
    qf = float(q)
    return (pairwise_sum(mag**qf) * cell_volume) ** (1 / qf)


def field_lp_norm(sampled: SampledField, p) -> float:
    return sampled_lp_norm(sampled.values, float(np.prod(sampled.step)), p)


def lp_norm(
    cap: SpectralCap,
    region: TubularNeighborhood,
    p,
    grid: GridSpec = GridSpec(),
    motion: Optional[RigidMotion] = None,
) -> float:
    """``||T||_{L^p(region)}`` by the tensor midpoint rule (grid max for p = inf)."""
    return field_lp_norm(sample_region(cap, region, grid, motion), p)


def physical_defect(cap: SpectralCap, grid: GridSpec = GridSpec()) -> float:
    """``||F^{-1}[(|xi|^2 - 1) f]|| / ||T||`` in sampled L^2 over the unit box."""
    region = unit_box(cap.n, cap.h)
    origin, step, count = grid.lattice(region.half_widths, cap.h)
    kw = dict(per_period=grid.per_period, budget=grid.budget)
    plain = evaluate_grid(cap, origin, step, count, **kw)
    moved = evaluate_grid(cap, origin, step, count, multiplier=lambda r: r**2 - 1, **kw)
    return field_lp_norm(moved, 2) / field_lp_norm(plain, 2)


def slab_bound(sampled: SampledField, k: int, p) -> float:
    """sup over normal slices of the slice L^p norm, times (normal volume)^{1/p}."""
    q = as_index(p)
    step = sampled.step
    slices = sampled.values.reshape(int(np.prod(sampled.count[:k])), -1)
    tangent_cell = float(np.prod(step[:k]))
    normal_volume = float(np.prod([c * s for c, s in zip(sampled.count[k:], step[k:])]))
    best = max(sampled_lp_norm(slices[:, m], tangent_cell, q) for m in range(slices.shape[1]))
    if q == math.inf:
        return best
    return best * normal_volume ** (1 / float(q))


@dataclass
class ExperimentRecord:
    n: int
    k: int
    p: str
    beta: float
    alpha: float
    h: float
    region: str
    norm: float
    nodes: int
    ms: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_residual: float
    count: int

    @property
    def exponent(self) -> float:
        """The fitted s in ``norm ~ h^{-s}``."""
        return -self.slope

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept,
            "max_residual": self.max_residual, "count": self.count,
            "exponent": self.exponent,
        }


@dataclass(frozen=True)
class SweepConfig:
    n: int
    k: int
    p: Union[str, int, Fraction]
    beta: float
    h_list: tuple
    alpha: Union[float, str] = "auto"
    grid: GridSpec = field(default_factory=GridSpec)
    extent: float = 0.5

    def __post_init__(self):
        if len(self.h_list) < 3:
            raise DomainError("a sweep needs at least 3 values of h")
        if len(set(self.h_list)) != len(self.h_list):
            raise DomainError("h values in a sweep must be distinct")

    def resolved_alpha(self) -> float:
        if self.alpha == "auto":
            q = ScaleQuery(self.n, self.k, self.p, as_real(self.beta))
            return float(representative_alpha(q.n, q.k, q.p, q.beta))
        return float(self.alpha)


def dyadic(start: int, count: int) -> tuple:
    """``(2^-start, 2^-(start+1), ...)``, ``count`` values."""
    return tuple(2.0 ** -(start + i) for i in range(count))


def measure(config: SweepConfig, h: float, alpha: float, timing: bool = False) -> ExperimentRecord:
    sub = FlatSubmanifold(config.n, config.k)
    region = TubularNeighborhood(sub, config.beta, h, config.extent)
    # Long axis of the tube along the submanifold's first tangent direction.
    cap = SpectralCap(config.n, h, alpha, omega0=tuple(sub.tangent))
    t0 = time.perf_counter()
    sampled = sample_region(cap, region, config.grid)
    norm = field_lp_norm(sampled, config.p)
    ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return ExperimentRecord(
        config.n, config.k, format_index(config.p), float(config.beta), alpha, h,
        region.label, norm, int(sampled.meta["nodes"]), ms,
    )


def sweep(config: SweepConfig, threads: int = 1, timing: bool = False) -> list[ExperimentRecord]:
    """One record per h; measurements are independent and may run in parallel."""
    alpha = config.resolved_alpha()
    if threads <= 1:
        return [measure(config, h, alpha, timing) for h in config.h_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda h: measure(config, h, alpha, timing), config.h_list))


def fit_exponent(records: Iterable) -> FitResult:
    """Least-squares line through ``(log h, log norm)`` with equal weights."""
    pairs = [(r.h, r.norm) if hasattr(r, "h") else tuple(r) for r in records]
    if len(pairs) < 3:
        raise DomainError("need at least 3 records to fit an exponent")
    h = np.array([a for a, _ in pairs], dtype=float)
    y = np.array([b for _, b in pairs], dtype=float)
    if len(set(h.tolist())) != len(h) or np.any(h <= 0) or np.any(y <= 0):
        raise DomainError("h values must be distinct and positive, norms positive")
    x, ly = np.log(h), np.log(y)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.abs(resid).max()), len(h))
