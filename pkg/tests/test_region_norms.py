import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quasimode_lab import DomainError, ResolutionError
from quasimode_lab.flat_quasimode import SpectralCap, center_value
from quasimode_lab.region_norms import (
    FitResult,
    FlatSubmanifold,
    GridSpec,
    SweepConfig,
    TubularNeighborhood,
    dyadic,
    field_lp_norm,
    fit_exponent,
    lp_norm,
    physical_defect,
    sample_region,
    sampled_lp_norm,
    slab_bound,
    sweep,
    unit_box,
)


def tube(beta, h, n=2, k=1):
    return TubularNeighborhood(FlatSubmanifold(n, k), beta, h)


def test_neighborhood_geometry():
    t = tube(0.5, 0.01)
    assert t.half_widths == [0.5, pytest.approx(0.1)]
    assert t.volume() == pytest.approx(1.0 * 0.2)
    # h^beta larger than the box is clipped to the box
    assert unit_box(3, 0.01).half_widths == [0.5, 0.5, 0.5]
    assert "beta=0.5" in t.label
    with pytest.raises(DomainError):
        FlatSubmanifold(3, 3)
    with pytest.raises(DomainError):
        tube(0.5, 1.5)
    with pytest.raises(DomainError):
        TubularNeighborhood(FlatSubmanifold(2, 1), 0.5, 0.1, extent=0)


@given(
    p=st.sampled_from([2, 3, 4.5, "inf"]), vol=st.floats(1e-4, 10),
    count=st.integers(1, 200),
)
def test_constant_field_norm_is_volume_power(p, vol, count):
    cell = vol / count
    got = sampled_lp_norm(np.ones(count), cell, p)
    expect = 1.0 if p == "inf" else vol ** (1 / float(p))
    assert got == pytest.approx(expect, rel=1e-12)


def test_sampled_norm_rejects_bad_input():
    with pytest.raises(DomainError):
        sampled_lp_norm(np.ones(3), 1.0, 0.5)
    with pytest.raises(DomainError):
        sampled_lp_norm(np.ones(0), 1.0, 2)


def test_grid_resolution_rule():
    origin, step, count = GridSpec().lattice([0.5, 0.1], 0.05)
    assert max(step) <= 0.05 / 4
    assert origin[0] == pytest.approx(-0.5 + step[0] / 2)
    with pytest.raises(ResolutionError):
        GridSpec(points_per_h=3).lattice([0.5], 0.1)


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_l2_over_box_bounded_by_plancherel(alpha):
    cap = SpectralCap(2, 2.0**-5, alpha)
    inside = lp_norm(cap, unit_box(2, cap.h), 2)
    assert inside <= cap.l2_norm() * 1.001


def test_sup_norm_sees_the_peak():
    cap = SpectralCap(2, 2.0**-6, 0.25)
    sup = lp_norm(cap, tube(1.0, cap.h), "inf")
    assert 0.95 * center_value(cap) <= sup <= 1.001 * center_value(cap)


@pytest.mark.parametrize("p", [2, 4, "inf"])
def test_slab_bound_dominates(p):
    cap = SpectralCap(2, 2.0**-5, 0.25)
    sampled = sample_region(cap, tube(0.75, cap.h))
    assert field_lp_norm(sampled, p) <= slab_bound(sampled, 1, p) * (1 + 1e-12)


def test_norm_shrinks_with_beta():
    cap = SpectralCap(2, 2.0**-6, 0.5)
    norms = [lp_norm(cap, tube(b, cap.h), 4) for b in (0.5, 0.75, 1.0)]
    assert norms[0] >= norms[1] * 0.98 and norms[1] >= norms[2] * 0.98


def test_fit_recovers_power_law():
    hs = dyadic(4, 5)
    recs = [(h, 3.0 * h**-0.3) for h in hs]
    fit = fit_exponent(recs)
    assert fit.exponent == pytest.approx(0.3, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.max_residual < 1e-12 and fit.count == 5
    assert isinstance(fit, FitResult) and fit.to_dict()["exponent"] == fit.exponent


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.05, 2.0)])
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.1, 2.0), (0.05, 2.0)])
    with pytest.raises(DomainError):
        fit_exponent([(0.1, 1.0), (0.05, 0.0), (0.02, 2.0)])


def test_sweep_config_validation():
    with pytest.raises(DomainError):
        SweepConfig(2, 1, 4, 0.75, (0.1, 0.05))
    with pytest.raises(DomainError):
        SweepConfig(2, 1, 4, 0.75, (0.1, 0.1, 0.05))
    assert SweepConfig(2, 1, 2, 0.75, dyadic(4, 3)).resolved_alpha() == 0.5
    assert SweepConfig(2, 1, "inf", 0.75, dyadic(4, 3)).resolved_alpha() == 0.0
    assert SweepConfig(2, 1, 4, 0.75, dyadic(4, 3), alpha=0.1).resolved_alpha() == 0.1


def test_sweep_threads_and_timing():
    cfg = SweepConfig(2, 1, 4, 0.75, dyadic(4, 3))
    one = sweep(cfg)
    many = sweep(cfg, threads=3)
    assert [r.to_dict() for r in one] == [r.to_dict() for r in many]
    assert all(r.ms is None for r in one)
    assert all(r.ms >= 0 for r in sweep(cfg, timing=True))
    assert [r.h for r in one] == list(cfg.h_list)


def test_sweep_exponent_close_to_prediction():
    # beta = 1, p = inf: sigma = 1/2 and the point scale alpha = 0 is optimal
    recs = sweep(SweepConfig(2, 1, "inf", 1.0, dyadic(4, 4)))
    assert fit_exponent(recs).exponent == pytest.approx(0.5, abs=0.05)


@pytest.mark.parametrize("e", [4, 5, 6])
def test_physical_defect_within_three_h(e):
    h = 2.0**-e
    assert physical_defect(SpectralCap(2, h, 0.25)) <= 3 * h
