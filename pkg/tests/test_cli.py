import json

import numpy as np
import pytest

from quasimode_lab import FORMAT_VERSION
from quasimode_lab import io as qio
from quasimode_lab.cli import run
from quasimode_lab.flat_quasimode import RigidMotion, SpectralCap, evaluate_grid, rotation_2d
from quasimode_lab.region_norms import ExperimentRecord


def body(path):
    return json.loads(path.read_text())


def test_exponents_single_query(tmp_path):
    assert run(["exponents", "--n", "3", "--k", "2", "--p", "2", "--beta", "0.75", "--out", str(tmp_path)]) == 0
    rows = body(tmp_path / "exponents.json")["rows"]
    assert len(rows) == 1 and rows[0]["sigma_exact"] == "-1/8"
    lines = (tmp_path / "exponents.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and FORMAT_VERSION in lines[0]
    assert lines[1].split(",")[:4] == ["n", "k", "p", "beta"]


def test_exponents_k_equals_n_is_delta_only(tmp_path):
    assert run(["exponents", "--n", "3", "--k", "3", "--p", "inf", "--out", str(tmp_path)]) == 0
    (row,) = body(tmp_path / "exponents.json")["rows"]
    assert row["delta_exact"] == "1" and "sigma" not in row


def test_exponents_grid_continuous_at_breakpoints(tmp_path):
    cfg = tmp_path / "c.json"
    # triples straddling p_hyp = 3 and p_stz = 4
    ps = ["2999/1000", "3", "3001/1000", "3999/1000", "4", "4001/1000"]
    cfg.write_text(json.dumps({"n": [3], "k": [1, 2], "p": ps, "beta": [0.7]}))
    assert run(["exponents", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = body(tmp_path / "o" / "exponents.json")["rows"]
    for k in (1, 2):
        s = [r["sigma"] for r in rows if r["k"] == k]
        for t in (s[:3], s[3:]):
            assert max(t) - min(t) < 1e-3


def test_predict_curve_max_matches_sigma(tmp_path):
    assert run(["predict", "--n", "2", "--k", "1", "--p", "2", "--beta", "0.75", "--out", str(tmp_path)]) == 0
    rep = body(tmp_path / "predict.json")
    assert rep["alpha_star"] == [[0.5, 0.5]] and rep["case_label"] == "Thalf_tube"
    lines = (tmp_path / "curve.csv").read_text().splitlines()[2:]
    top = max(float(line.split(",")[1]) for line in lines)
    assert top == pytest.approx(rep["sigma"], abs=1e-12)
    assert rep["config"]["beta"] == 0.75 and rep["format"] == FORMAT_VERSION


def test_domain_error_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["predict", "--beta", "-0.5", "--out", str(out)]) == 2
    assert not out.exists()
    assert "beta" in capsys.readouterr().err


def test_sphere_rejects_large_alpha(tmp_path):
    assert run(["sphere", "--alpha", "0.6", "--out", str(tmp_path / "o")]) == 2


def test_unknown_keys_and_unused_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["predict", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert run(["exponents", "--j", "3", "--out", str(tmp_path / "o")]) == 2


def test_resolution_and_budget_errors(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"points_per_h": 2}))
    assert run(["quasimode", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert run(["quasimode", "--h-start", "14", "--alpha", "0", "--out", str(tmp_path / "o")]) == 3
    assert not (tmp_path / "o").exists()


def test_failed_verification_exits_4(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"h_count": 3, "tolerance": 1e-6}))
    assert run(["scaling", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4
    assert body(tmp_path / "o" / "summary.json")["passed"] is False


def test_quasimode_report_and_field(tmp_path):
    assert run(["quasimode", "--alpha", "0.25", "--h-start", "6", "--out", str(tmp_path)]) == 0
    rep = body(tmp_path / "quasimode.json")
    h = 2.0**-6
    assert rep["defect_bound"] == 2 * h + h * h
    assert rep["tube_constant"] > 0
    assert rep["physical_defect_ratio"] <= 3 * h
    field = qio.field_from_bytes((tmp_path / "field.bin").read_bytes())
    assert field.meta["alpha"] == 0.25 and field.values.shape == tuple(field.count)
    header = json.loads((tmp_path / "field.bin").read_bytes().split(b"\n", 1)[0])
    assert header["config"]["h_start"] == 6 and header["format"] == FORMAT_VERSION


def test_scaling_outputs(tmp_path):
    assert run(["scaling", "--p", "inf", "--beta", "1", "--h-count", "4", "--out", str(tmp_path)]) == 0
    recs = qio.read_records_csv((tmp_path / "records.csv").read_text())
    assert len(recs) == 4 and all(r.ms is None for r in recs)
    summary = body(tmp_path / "summary.json")
    assert abs(summary["deviation"]) <= 0.15 and summary["fit"]["count"] == 4


def test_sphere_report(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"j": 60, "alpha": 0.4, "pair_offsets": [1, 2, 3]}))
    assert run(["sphere", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = body(tmp_path / "o" / "sphere.json")
    assert rep["harmonicity_max"] < 1e-12
    assert rep["l2_norm_u1_rel_error"] < 1e-4
    assert rep["pair_decay_exponent"] <= -1.5
    harmonic = body(tmp_path / "o" / "harmonic.json")["harmonic_sum"]
    assert harmonic["j"] == 60 and harmonic["terms"][0]["im_x1"] is True


@pytest.mark.parametrize("command, extra", [
    ("scaling", ["--h-count", "4"]),
    ("quasimode", ["--h-start", "5"]),
    ("exponents", []),
])
def test_byte_identical_across_threads(tmp_path, command, extra):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run([command, *extra, "--threads", "1", "--out", str(a)]) == 0
    assert run([command, *extra, "--threads", "8", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_field_json_round_trip():
    cap = SpectralCap(2, 2.0**-4, 0.25)
    M = RigidMotion(rotation_2d(0.3), np.array([0.1, 0.0]))
    f = evaluate_grid(cap, [-0.1, -0.1], [0.05, 0.05], [3, 4], M)
    back = qio.field_from_json(qio.field_to_json(f))
    assert np.array_equal(back.values, f.values)
    assert back.meta["motion"]["translation"] == [0.1, 0.0]
    raw = qio.field_from_bytes(qio.field_to_bytes(f))
    assert np.array_equal(raw.values, f.values) and raw.step == f.step


def test_records_csv_round_trip():
    recs = [ExperimentRecord(2, 1, "inf", 0.75, 0.0, 1 / 3, "r", 0.1 + 0.2, 100)]
    text = qio.records_csv(recs, config={"a": 1})
    back = qio.read_records_csv(text)
    assert back[0].norm == 0.1 + 0.2 and back[0].h == 1 / 3 and back[0].p == "inf"
    assert "0.30000000000000004" in text


def test_fmt_float():
    assert qio.fmt_float(0.1) == "0.10000000000000001"
    assert qio.fmt_float(float("inf")) == "inf"
    assert qio.fmt_float(3) == "3"
    assert qio.fmt_float(None) == ""
