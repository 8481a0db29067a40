"""Serialization: sampled fields, experiment records, JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import FORMAT_VERSION
from .errors import DomainError
from .flat_quasimode import SampledField
from .region_norms import ExperimentRecord

RECORD_FIELDS = ("n", "k", "p", "beta", "alpha", "h", "norm", "nodes", "ms")


def fmt_float(x: float) -> str:
    """17 significant digits, '.' decimal, independent of locale."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def envelope(command: str, config: dict, body: dict) -> dict:
    return {"format": FORMAT_VERSION, "command": command, "config": config, **body}


def field_header(sampled: SampledField, config: dict | None = None) -> dict:
    cap = sampled.meta.get("cap", {})
    head = {} if config is None else {"config": config}
    return {
        **head,
        "format": FORMAT_VERSION,
        "n": cap.get("n", len(sampled.count)),
        "h": cap.get("h"),
        "alpha": cap.get("alpha"),
        "omega0": cap.get("omega0"),
        "motion": sampled.meta.get("motion"),
        "grid": {"origin": list(sampled.origin), "step": list(sampled.step), "count": list(sampled.count)},
    }


def field_to_bytes(sampled: SampledField, config: dict | None = None) -> bytes:
    """One JSON header line, then little-endian float64 (re, im) pairs, row-major."""
    header = json.dumps(_jsonable(field_header(sampled, config)), sort_keys=True, separators=(",", ":"))
    pairs = np.ascontiguousarray(sampled.values, dtype="<c16").view("<f8")
    return header.encode("ascii") + b"\n" + pairs.tobytes(order="C")


def field_from_bytes(blob: bytes) -> SampledField:
    line, _, data = blob.partition(b"\n")
    header = json.loads(line)
    g = header["grid"]
    expected = 16 * int(np.prod(g["count"]))
    if len(data) != expected:
        raise DomainError(f"field payload has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8").view("<c16").reshape(g["count"]).astype(complex)
    meta = {k: header[k] for k in ("n", "h", "alpha", "omega0", "motion")}
    return SampledField(g["origin"], g["step"], g["count"], values, meta)


def field_to_json(sampled: SampledField, config: dict | None = None) -> str:
    """Pure-JSON variant for small grids: ``values`` as nested [re, im] pairs."""
    doc = field_header(sampled, config)
    flat = sampled.values.ravel()
    doc["values"] = [[float(v.real), float(v.imag)] for v in flat]
    return dumps(doc)


def field_from_json(text: str) -> SampledField:
    doc = json.loads(text)
    g = doc["grid"]
    vals = np.array([complex(re, im) for re, im in doc["values"]]).reshape(g["count"])
    meta = {k: doc[k] for k in ("n", "h", "alpha", "omega0", "motion")}
    return SampledField(g["origin"], g["step"], g["count"], vals, meta)


def preamble(config: dict) -> str:
    """Comment line carrying the format version and the full config."""
    doc = {"format": FORMAT_VERSION, "config": _jsonable(config)}
    return "# " + json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _data_lines(text: str) -> str:
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def records_csv(
    records: Sequence[ExperimentRecord],
    columns: Sequence[str] = RECORD_FIELDS,
    config: dict | None = None,
) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write(preamble(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        d = r.to_dict() if hasattr(r, "to_dict") else dict(r)
        w.writerow([d[c] if isinstance(d[c], str) else fmt_float(d[c]) for c in columns])
    return buf.getvalue()


def read_records_csv(text: str) -> list[ExperimentRecord]:
    names = {f.name for f in fields(ExperimentRecord)}
    out = []
    for row in csv.DictReader(io.StringIO(_data_lines(text))):
        d = {k: v for k, v in row.items() if k in names}
        out.append(ExperimentRecord(
            int(d["n"]), int(d["k"]), d["p"], float(d["beta"]), float(d["alpha"]),
            float(d["h"]), d.get("region", ""), float(d["norm"]), int(d["nodes"]),
            float(d["ms"]) if d.get("ms") else None,
        ))
    return out


def rows_csv(rows: Iterable[dict], columns: Sequence[str], config: dict | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write(preamble(config))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating, int, np.integer)):
        return fmt_float(v)
    if isinstance(v, Fraction):
        return str(v)
    if hasattr(v, "value") and hasattr(v, "name"):
        return str(v.value)
    return str(v)


def write_outputs(outputs: dict[str, bytes | str], directory: Path) -> list[Path]:
    """Write every file only after all contents exist, so failures leave nothing behind."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in sorted(outputs.items()):
        path = directory / name
        data = content.encode("utf-8") if isinstance(content, str) else content
        path.write_bytes(data)
        written.append(path)
    return written
