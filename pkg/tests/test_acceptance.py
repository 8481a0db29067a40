"""Acceptance criteria A1-A8.  Each test prints one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from quasimode_lab.cli import run
from quasimode_lab.exponents import breakpoints, delta, sigma
from quasimode_lab.flat_quasimode import SpectralCap, center_value, defect_bound, evaluate, verify_tube_bound
from quasimode_lab.region_norms import SweepConfig, dyadic, fit_exponent, physical_defect, sweep
from quasimode_lab.scale_predictor import ScaleQuery, case_table, predict_alpha
from quasimode_lab.sphere_harmonics import (
    build,
    build_u1,
    concentration_check,
    l2_norm,
    pair_correlation,
    wallis_norm_u1,
)

BETAS = [F(50 + 5 * i, 100) for i in range(11)]


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail, started):
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\n{name} {status}: {detail} [{time.perf_counter() - started:.1f}s]")
        assert ok, detail

    return emit


def test_a1_exponent_continuity(report):
    t0 = time.perf_counter()
    eps = F(1, 10**15)
    worst = F(0)
    for n in range(2, 9):
        bp = breakpoints(n)
        for pb in (bp.p_hyp, bp.p_stz):
            for k in range(1, n + 1):
                vals = [delta(n, k, q).exponent for q in (pb - eps, pb, pb + eps)]
                worst = max(worst, max(vals) - min(vals))
                if k == n:
                    continue
                for b in BETAS:
                    vals = [sigma(n, k, q, b).exponent for q in (pb - eps, pb, pb + eps)]
                    worst = max(worst, max(vals) - min(vals))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 1.0
    report("A1", ok, f"max jump across p_hyp, p_stz = {float(worst):.2e} (tol 1e-12)", t0)


def test_a2_anchors(report):
    t0 = time.perf_counter()
    bad = []
    for n in range(2, 9):
        if delta(n, n, "inf").exponent != F(n - 1, 2):
            bad.append(("delta inf", n))
        if delta(n, n, 2).exponent != 0:
            bad.append(("delta 2", n))
        if delta(n, n - 1, 2).exponent != F(1, 4):
            bad.append(("hyper 2", n))
        for k in range(1, n - 1):
            for b in BETAS:
                if sigma(n, k, 2, b).exponent != F(1, 2) - b:
                    bad.append(("sigma 2", n, k, b))
        for k in range(1, n):
            for p in (2, F(5, 2), 3, 4, 6, 10, "inf"):
                if sigma(n, k, p, F(1, 2)).exponent != delta(n, n, p).exponent:
                    bad.append(("beta 1/2", n, k, p))
    ok = not bad and time.perf_counter() - t0 < 1.0
    report("A2", ok, f"{len(bad)} anchor mismatches (exact)", t0)


def test_a3_optimizer_matches_closed_form(report):
    t0 = time.perf_counter()
    worst, mismatches, count = 0.0, [], 0
    step = 1 / 1024
    for n in (2, 3, 4):
        for k in range(1, n):
            for p in (2, F(5, 2), 3, 4, 6, 10, "inf"):
                for b in BETAS:
                    pred = predict_alpha(ScaleQuery(n, k, p, b))
                    worst = max(worst, abs(pred.exponent_at_max - float(sigma(n, k, p, b).exponent)))
                    lo, hi = (float(x) for x in case_table(n, k, p, b))
                    # case-table interval must sit inside the argmax set (supersets allowed)
                    if not (pred.contains(lo, step) and pred.contains(hi, step)):
                        mismatches.append((n, k, p, b))
                    count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and not mismatches and elapsed < 10
    report("A3", ok, f"{count} queries, max |max E - sigma| = {worst:.2e} (tol 1e-3), "
                     f"{len(mismatches)} case-table mismatches", t0)


def test_a4_quasimode_defect(report):
    t0 = time.perf_counter()
    exact = all(defect_bound(SpectralCap(2, 2.0**-e, 0.25)) == 2 * 2.0**-e + 4.0**-e for e in range(2, 12))
    ratios = []
    for e in (4, 5, 6):
        h = 2.0**-e
        for alpha in (0.0, 0.25, 0.5):
            ratios.append(physical_defect(SpectralCap(2, h, alpha)) / h)
    ok = exact and max(ratios) <= 3 and time.perf_counter() - t0 < 60
    report("A4", ok, f"closed form exact={exact}; max defect/h = {max(ratios):.3f} (tol 3)", t0)


def test_a5_tube_lower_bound(report):
    t0 = time.perf_counter()
    spreads, centre_err = {}, 0.0
    for alpha in (0.0, 0.25, 0.5):
        cs = []
        for e in range(4, 9):
            h = 2.0**-e
            cap = SpectralCap(2, h, alpha)
            cs.append(verify_tube_bound(cap, eps=0.1))
            closed = 2 / math.pi * h ** ((alpha - 1) / 2)
            got = evaluate(cap, [[0.0, 0.0]])[0]
            centre_err = max(centre_err, abs(got - closed) / closed, abs(center_value(cap) - closed) / closed)
        spreads[alpha] = max(cs) / min(cs) if min(cs) > 0 else math.inf
    worst = max(spreads.values())
    ok = worst <= 2 and centre_err <= 1e-6 and time.perf_counter() - t0 < 300
    report("A5", ok, f"max c spread across h = {worst:.4f} (tol 2), x=0 rel err = {centre_err:.1e} (tol 1e-6)", t0)


def test_a6_scaling_saturation(report):
    t0 = time.perf_counter()
    rows = []
    for beta in (0.5, 0.75, 1.0):
        for p in (2, 4, 8, "inf"):
            cfg = SweepConfig(2, 1, p, beta, dyadic(4, 6))
            fit = fit_exponent(sweep(cfg))
            target = float(sigma(2, 1, p, beta).exponent)
            rows.append((beta, p, cfg.resolved_alpha(), fit.exponent - target))
    worst = max(rows, key=lambda r: abs(r[3]))
    ok = abs(worst[3]) <= 0.15 and time.perf_counter() - t0 < 1800
    report("A6", ok, f"{len(rows)} sweeps, worst |fit - sigma| = {abs(worst[3]):.4f} at "
                     f"beta={worst[0]}, p={worst[1]}, alpha={worst[2]} (tol 0.15)", t0)


def test_a7_sphere_construction(report):
    t0 = time.perf_counter()
    js = (100, 200, 400)
    harm, wallis = 0.0, 0.0
    norm_spread, conc_spread = 0.0, 0.0
    for j in js:
        u1 = build_u1(2, j)
        oracle = wallis_norm_u1(j, u1.h)
        wallis = max(wallis, abs(l2_norm(u1) - oracle) / oracle)
    for eps in (0.1, 1.0):
        for alpha in (0.3, 0.5):
            norms, concs = [], []
            for j in js:
                u = build(2, j, alpha, eps)
                harm = max(harm, float(u.harmonicity_residuals().max()))
                norms.append(l2_norm(u))
                concs.append(concentration_check(u))
            norm_spread = max(norm_spread, max(norms) / min(norms))
            conc_spread = max(conc_spread, max(concs) / min(concs))
    u = build_u1(2, 400)
    offsets = np.arange(1, 11)
    values = [pair_correlation(u, 0, int(d), 2) for d in offsets]
    slope = float(np.polyfit(np.log(offsets), np.log(values), 1)[0])
    checks = [harm < 1e-12, wallis <= 1e-4, norm_spread <= 2, conc_spread <= 2, slope <= -1.5]
    ok = all(checks) and time.perf_counter() - t0 < 600
    report("A7", ok, f"harmonicity {harm:.1e} (tol 1e-12); Wallis rel {wallis:.1e} (tol 1e-4); "
                     f"||u_n|| spread {norm_spread:.3f} (tol 2); concentration spread {conc_spread:.3f} (tol 2); "
                     f"pair decay exponent {slope:.2f} (tol <= -1.5)", t0)


def test_a8_determinism(report, tmp_path):
    t0 = time.perf_counter()
    sphere_cfg = tmp_path / "sphere.json"
    sphere_cfg.write_text(json.dumps({"j": 60, "pair_offsets": [1, 2]}))
    commands = {
        "exponents": [],
        "predict": ["--p", "4", "--beta", "0.7", "--n", "3", "--k", "1"],
        "quasimode": ["--h-start", "6"],
        "scaling": ["--h-count", "5"],
        "sphere": ["--config", str(sphere_cfg)],
    }
    differing = []
    for name, extra in commands.items():
        outs = []
        for i, threads in enumerate(("1", "1", "8", "8")):
            d = tmp_path / f"{name}{i}"
            assert run([name, *extra, "--threads", threads, "--out", str(d)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        if any(o != outs[0] for o in outs[1:]):
            differing.append(name)
    ok = not differing and time.perf_counter() - t0 < 60
    report("A8", ok, f"{len(commands)} commands x 4 runs (threads 1, 1, 8, 8); "
                     f"differing: {differing or 'none'}", t0)
