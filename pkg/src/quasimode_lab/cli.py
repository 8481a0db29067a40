"""Command-line runner: ``quasimode-lab {exponents,predict,quasimode,scaling,sphere}``.

Each command reads a JSON config (``--config``), applies flag overrides,
computes everything in memory, and only then writes its files to ``--out``.
Every file carries the resolved config and the format version.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import FORMAT_VERSION, __version__
from . import io as qio
from .errors import DomainError, LabError, VerificationError
from .exponents import as_index, as_real, breakpoints, delta, format_index, sigma
from .flat_quasimode import (
    RigidMotion,
    SpectralCap,
    center_value,
    defect_bound,
    evaluate,
    evaluate_grid,
    tube_region,
    verify_tube_bound,
)
from .region_norms import GridSpec, SweepConfig, dyadic, fit_exponent, physical_defect, sweep
from .scale_predictor import ScaleQuery, check_against_sigma, exponent_curve, predict_alpha
from .sphere_harmonics import (
    SphereGrid,
    build,
    build_u1,
    concentration_check,
    l2_norm,
    pair_correlation,
    wallis_norm_u1,
)

DEFAULTS: dict[str, dict] = {
    "exponents": {"n": [3], "k": None, "p": ["2", "4", "inf"], "beta": [0.75]},
    "predict": {"n": 2, "k": 1, "p": "2", "beta": 0.75, "alpha_step": "1/1024"},
    "quasimode": {
        "n": 2, "alpha": 0.25, "h_start": 6, "omega0": None, "motion": None,
        "half_width": 0.5, "points_per_h": 4, "per_period": 8,
        "tube_eps": 0.1, "tube_samples": 9, "field_format": "binary",
        "tolerances": {"defect_over_h": 3.0, "center_rel": 1e-6},
    },
    "scaling": {
        "n": 2, "k": 1, "p": "4", "beta": 0.75, "alpha": "auto",
        "h_start": 4, "h_count": 6, "points_per_h": 4, "per_period": 8,
        "tolerance": 0.15,
    },
    "sphere": {
        "n": 2, "j": 200, "alpha": 0.4, "epsilon": 0.1, "nodes_per_h": 4,
        "eps_region": 0.1, "pair_offsets": [1, 2, 3],
        "tolerances": {"harmonicity": 1e-12, "wallis_rel": 1e-4, "decay_exponent": -1.5},
    },
}

# flag -> config key
OVERRIDES = {
    "n": "n", "k": "k", "p": "p", "beta": "beta", "alpha": "alpha",
    "j": "j", "h_start": "h_start", "h_count": "h_count",
}
LIST_KEYS = {"exponents": {"n", "k", "p", "beta"}}


def load_config(command: str, path: str | None, overrides: dict) -> dict:
    config = copy.deepcopy(DEFAULTS[command])
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise DomainError("config must be a JSON object")
        unknown = sorted(set(user) - set(config))
        if unknown:
            raise DomainError(f"unknown config keys for {command}: {', '.join(unknown)}")
        config.update(user)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in config:
            raise DomainError(f"--{key.replace('_', '-')} is not used by {command}")
        config[key] = [value] if key in LIST_KEYS.get(command, ()) else value
    return config


def _index_str(p) -> str:
    return format_index(as_index(p))


def _float(value, name: str) -> float:
    try:
        return float(as_real(value))
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"{name}={value!r} is not a number") from exc


def _int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise DomainError(f"{name}={value!r} must be an integer")
    return int(value)


def _fraction_str(x: Fraction) -> str:
    return str(Fraction(x))


# -- exponents ---------------------------------------------------------------

EXPONENT_COLUMNS = (
    "n", "k", "p", "beta", "p_stz", "p_hyp",
    "delta", "delta_exact", "delta_regime", "delta_log_loss",
    "sigma", "sigma_exact", "sigma_regime", "sigma_log_loss", "justification",
)


def cmd_exponents(config: dict, threads: int, timing: bool):
    ns = [_int(v, "n") for v in config["n"]]
    rows = []
    for n in ns:
        bp = breakpoints(n)
        ks = range(1, n + 1) if config["k"] is None else [_int(v, "k") for v in config["k"]]
        for k in ks:
            for p in config["p"]:
                d = delta(n, k, p)
                base = {
                    "n": n, "k": k, "p": _index_str(p), "p_stz": _fraction_str(bp.p_stz),
                    "p_hyp": _fraction_str(bp.p_hyp), "delta": float(d), "delta_exact": _fraction_str(d.exponent),
                    "delta_regime": d.regime, "delta_log_loss": d.log_loss,
                }
                if k == n:
                    rows.append(base)
                    continue
                for beta in config["beta"]:
                    s = sigma(n, k, p, beta)
                    rows.append({
                        **base, "beta": _fraction_str(as_real(beta)), "sigma": float(s),
                        "sigma_exact": _fraction_str(s.exponent), "sigma_regime": s.regime,
                        "sigma_log_loss": s.log_loss, "justification": s.justification,
                    })
    outputs = {
        "exponents.csv": qio.rows_csv(rows, EXPONENT_COLUMNS, config),
        "exponents.json": qio.dumps(qio.envelope("exponents", config, {"rows": rows})),
    }
    return outputs, True


# -- predict -----------------------------------------------------------------

def cmd_predict(config: dict, threads: int, timing: bool):
    q = ScaleQuery(_int(config["n"], "n"), _int(config["k"], "k"), config["p"],
                   config["beta"], config["alpha_step"])
    pred = predict_alpha(q)
    gap = check_against_sigma(q)
    alphas, values = exponent_curve(q)
    ref = sigma(q.n, q.k, q.p, q.beta)
    body = {
        "alpha_star": [list(iv) for iv in pred.alpha_star],
        "exponent_at_max": pred.exponent_at_max,
        "case_label": pred.case_label,
        "alpha_case": _fraction_str(pred.alpha_case),
        "critical_time_scale": _fraction_str(pred.critical_time_scale),
        "case_table": [_fraction_str(x) for x in pred.expected],
        "sigma": float(ref), "sigma_exact": _fraction_str(ref.exponent),
        "max_minus_sigma": gap,
        "passed": abs(gap) <= 1e-3,
    }
    curve = [{"alpha": a, "exponent": v} for a, v in zip(alphas.tolist(), values.tolist())]
    outputs = {
        "predict.json": qio.dumps(qio.envelope("predict", config, body)),
        "curve.csv": qio.rows_csv(curve, ("alpha", "exponent"), config),
    }
    return outputs, body["passed"]


# -- quasimode ---------------------------------------------------------------

def cmd_quasimode(config: dict, threads: int, timing: bool):
    n = _int(config["n"], "n")
    h = 2.0 ** -_int(config["h_start"], "h_start")
    omega0 = None if config["omega0"] is None else tuple(config["omega0"])
    cap = SpectralCap(n, h, _float(config["alpha"], "alpha"), omega0)
    motion = None if config["motion"] is None else RigidMotion.from_dict(config["motion"])
    grid = GridSpec(config["points_per_h"], config["per_period"])
    hw = _float(config["half_width"], "half_width")
    if hw <= 0:
        raise DomainError("half_width must be positive")
    origin, step, count = grid.lattice([hw] * n, h)
    centre = np.zeros(n) if motion is None else motion.translation
    origin = [o + c for o, c in zip(origin, centre)]
    sampled = evaluate_grid(cap, origin, step, count, motion,
                            per_period=grid.per_period, budget=grid.budget)

    tol = config["tolerances"]
    eps = _float(config["tube_eps"], "tube_eps")
    c_tube = verify_tube_bound(cap, eps, _int(config["tube_samples"], "tube_samples"), motion,
                               per_period=grid.per_period, budget=grid.budget)
    at_centre = float(abs(evaluate(cap, centre[None, :], motion)[0]))
    exact = center_value(cap)
    centre_rel = abs(at_centre - exact) / exact
    defect = defect_bound(cap)
    ratio = physical_defect(cap, grid)
    box = tube_region(cap, eps, motion)
    checks = {
        "defect_closed_form": defect == (1 + h) ** 2 - 1,
        "physical_defect": h > 2.0**-4 or ratio <= tol["defect_over_h"] * h,
        "tube_constant_positive": c_tube > 0,
        "center_value": centre_rel <= tol["center_rel"],
    }
    body = {
        "cap": cap.to_dict(),
        "motion": None if motion is None else motion.to_dict(),
        "nodes": sampled.meta["nodes"],
        "defect_bound": defect,
        "physical_defect_ratio": ratio,
        "physical_defect_over_h": ratio / h,
        "tube_constant": c_tube,
        "tube_half_widths": box.half_widths.tolist(),
        "center_value": at_centre,
        "center_value_exact": exact,
        "center_value_rel_error": centre_rel,
        "checks": checks,
        "passed": all(checks.values()),
    }
    if config["field_format"] == "binary":
        field_name, field_data = "field.bin", qio.field_to_bytes(sampled, config)
    elif config["field_format"] == "json":
        field_name, field_data = "field.json", qio.field_to_json(sampled, config)
    else:
        raise DomainError(f"field_format={config['field_format']!r}: expected 'binary' or 'json'")
    outputs = {
        field_name: field_data,
        "quasimode.json": qio.dumps(qio.envelope("quasimode", config, body)),
    }
    return outputs, body["passed"]


# -- scaling -----------------------------------------------------------------

def cmd_scaling(config: dict, threads: int, timing: bool):
    h_list = dyadic(_int(config["h_start"], "h_start"), _int(config["h_count"], "h_count"))
    sc = SweepConfig(
        _int(config["n"], "n"), _int(config["k"], "k"), config["p"],
        _float(config["beta"], "beta"), h_list, config["alpha"],
        GridSpec(config["points_per_h"], config["per_period"]),
    )
    alpha = sc.resolved_alpha()
    records = sweep(sc, threads=threads, timing=timing)
    fit = fit_exponent(records)
    ref = float(sigma(sc.n, sc.k, sc.p, sc.beta))
    deviation = fit.exponent - ref
    body = {
        "alpha": alpha,
        "fit": fit.to_dict(),
        "sigma": ref,
        "deviation": deviation,
        "tolerance": config["tolerance"],
        "passed": abs(deviation) <= config["tolerance"],
    }
    outputs = {
        "records.csv": qio.records_csv(records, config=config),
        "summary.json": qio.dumps(qio.envelope("scaling", config, body)),
    }
    return outputs, body["passed"]


# -- sphere ------------------------------------------------------------------

def cmd_sphere(config: dict, threads: int, timing: bool):
    n, j = _int(config["n"], "n"), _int(config["j"], "j")
    alpha, eps = _float(config["alpha"], "alpha"), _float(config["epsilon"], "epsilon")
    grid = SphereGrid(config["nodes_per_h"])
    tol = config["tolerances"]
    u = build(n, j, alpha, eps)
    u1 = build_u1(n, j, alpha, eps)
    residual = float(u.harmonicity_residuals().max())
    norm_un = l2_norm(u, grid)
    norm_u1 = l2_norm(u1, grid)
    checks = {"harmonicity": residual < tol["harmonicity"]}
    body = {
        "h": u.h, "term_count": u.term_count, "prefactor": u.prefactor,
        "harmonicity_max": residual,
        "l2_norm_un": norm_un, "l2_norm_u1": norm_u1,
        "concentration": concentration_check(u, _float(config["eps_region"], "eps_region")),
    }
    if n == 2:
        oracle = wallis_norm_u1(j, u.h)
        body["l2_norm_u1_oracle"] = oracle
        body["l2_norm_u1_rel_error"] = abs(norm_u1 - oracle) / oracle
        checks["wallis"] = body["l2_norm_u1_rel_error"] <= tol["wallis_rel"]
    offsets = [_int(d, "pair_offsets") for d in config["pair_offsets"]]
    if offsets:
        values = [pair_correlation(u1, 0, d, 2, grid) for d in offsets]
        body["pair_correlation"] = [{"offset": d, "value": v} for d, v in zip(offsets, values)]
        usable = [(d, v) for d, v in zip(offsets, values) if d > 0 and v > 0]
        if len({d for d, _ in usable}) >= 2:
            x = np.log([1.0 + d for d, _ in usable])
            slope = float(np.polyfit(x, np.log([v for _, v in usable]), 1)[0])
            body["pair_decay_exponent"] = slope
            checks["pair_decay"] = slope <= tol["decay_exponent"]
    body["checks"] = checks
    body["passed"] = all(checks.values())
    outputs = {
        "harmonic.json": qio.dumps(qio.envelope("sphere", config, {"harmonic_sum": u.to_dict()})),
        "sphere.json": qio.dumps(qio.envelope("sphere", config, body)),
    }
    return outputs, body["passed"]


COMMANDS: dict[str, Callable] = {
    "exponents": cmd_exponents,
    "predict": cmd_predict,
    "quasimode": cmd_quasimode,
    "scaling": cmd_scaling,
    "sphere": cmd_sphere,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--timing", action="store_true",
                        help="record wall-clock ms per measurement (breaks byte-identity)")
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--p", help='Lebesgue index, e.g. 4, 5/2 or "inf"')
    common.add_argument("--beta")
    common.add_argument("--alpha")
    common.add_argument("--j", type=int)
    common.add_argument("--h-start", dest="h_start", type=int, help="h = 2^-h_start")
    common.add_argument("--h-count", dest="h_count", type=int)

    parser = argparse.ArgumentParser(prog="quasimode-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "exponents": "tabulate the closed-form exponents",
        "predict": "maximise the tube exponent over alpha",
        "quasimode": "sample a flat quasimode and verify it",
        "scaling": "fit L^p growth over an h sweep",
        "sphere": "build and verify a sphere eigenfunction",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for flag, key in OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if flag in ("beta", "alpha") and value != "auto":
            value = _float(value, flag)
        out[key] = value
    return out


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise DomainError("--threads must be >= 1")
        config = load_config(args.command, args.config, _overrides(args))
        with threadpool_limits(limits=1):
            outputs, passed = COMMANDS[args.command](config, args.threads, args.timing)
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: bad config value: {exc}", file=sys.stderr)
        return DomainError.exit_code
    for path in qio.write_outputs(outputs, Path(args.out)):
        print(path)
    if not passed:
        print(f"error: {args.command}: verification failed (see report)", file=sys.stderr)
        return VerificationError.exit_code
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
