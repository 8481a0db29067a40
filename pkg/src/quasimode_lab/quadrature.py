"""Composite Gauss-Legendre rules and deterministic reductions."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

PANEL_ORDER = 16


@lru_cache(maxsize=64)
def _reference(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panels_for(min_nodes: float, order: int = PANEL_ORDER) -> int:
    return max(1, int(math.ceil(min_nodes / order)))


def composite_gauss(a: float, b: float, panels: int, order: int = PANEL_ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b].

    The interval is split into ``panels`` equal pieces with ``order`` nodes
    each.  Nodes are returned in increasing order.
    """
    x, w = _reference(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def oscillation_nodes(variation: float, per_period: float, order: int = PANEL_ORDER) -> int:
    """Panels needed for ``per_period`` nodes per 2*pi of phase variation."""
    return panels_for(per_period * variation / (2 * math.pi), order)


def pairwise_sum(values: np.ndarray) -> float:
    """Sum a real array with numpy's pairwise reduction on a contiguous copy.

    The reduction tree depends only on the array length, so the result is
    bit-stable for a fixed node count.
    """
    return float(np.add.reduce(np.ascontiguousarray(values, dtype=np.float64).ravel()))
