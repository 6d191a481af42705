"""CSV and JSON serialization of result types.

Floats are written with ``repr`` (shortest round-trip form), so a value read
back is bit-identical to the value written. Files use ``\\n`` line endings
and UTF-8 regardless of platform.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .beamforming import BeamPattern
from .detection import RocCurve, RocMethod
from .errors import ParseError
from .registration import BeamPlan, OverlapResult, PowerMap

PATTERN_HEADER = ("phi_deg", "theta_deg", "gain_db")
POWER_HEADER = ("x_m", "y_m", "power_linear")
ROC_HEADER = ("threshold", "p_f", "p_d", "method")


def fmt(x) -> str:
    return repr(float(x))


def _write_rows(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def read_rows(text: str, header):
    reader = csv.reader(io.StringIO(text))
    try:
        got = next(reader)
    except StopIteration:
        raise ParseError("empty CSV", 1, 1) from None
    if tuple(got) != tuple(header):
        raise ParseError(f"expected header {','.join(header)}, got {','.join(got)}", 1, 1)
    rows = []
    for line, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line, 1)
        rows.append(row)
    return rows


def _floats(rows, cols):
    try:
        return np.array([[float(r[c]) for c in cols] for r in rows], dtype=float).reshape(len(rows), len(cols))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


# beampattern ------------------------------------------------------------------

def pattern_to_csv(pattern: BeamPattern) -> str:
    """Row-major over the grid: theta outer, phi inner."""
    phi_deg = np.degrees(pattern.phi)
    theta_deg = np.degrees(pattern.theta)
    rows = (
        (fmt(phi_deg[j]), fmt(theta_deg[i]), fmt(pattern.gain_db[i, j]))
        for i in range(theta_deg.size)
        for j in range(phi_deg.size)
    )
    return _write_rows(PATTERN_HEADER, rows)


def pattern_from_csv(text: str) -> BeamPattern:
    data = _floats(read_rows(text, PATTERN_HEADER), (0, 1, 2))
    if data.size == 0:
        raise ParseError("pattern CSV has no rows")
    phi_deg = np.unique(data[:, 0])
    theta_deg = np.unique(data[:, 1])
    if phi_deg.size * theta_deg.size != len(data):
        raise ParseError("pattern rows do not form a rectangular grid")
    expected_phi = np.tile(phi_deg, theta_deg.size)
    expected_theta = np.repeat(theta_deg, phi_deg.size)
    if not (np.array_equal(data[:, 0], expected_phi) and np.array_equal(data[:, 1], expected_theta)):
        raise ParseError("pattern rows are not in row-major grid order")
    gain = data[:, 2].reshape(theta_deg.size, phi_deg.size)
    return BeamPattern(np.radians(phi_deg), np.radians(theta_deg), gain)


# power map --------------------------------------------------------------------

def power_map_to_csv(pm: PowerMap) -> str:
    rows = ((fmt(x), fmt(y), fmt(p)) for x, y, p in zip(pm.x, pm.y, pm.power))
    return _write_rows(POWER_HEADER, rows)


def power_map_from_csv(text: str, shape=None, cell=None) -> PowerMap:
    data = _floats(read_rows(text, POWER_HEADER), (0, 1, 2))
    return PowerMap(data[:, 0].copy(), data[:, 1].copy(), data[:, 2].copy(), shape, cell)


# ROC ---------------------------------------------------------------------------

def roc_to_csv(curve: RocCurve) -> str:
    m = curve.method.value
    rows = ((fmt(t), fmt(f), fmt(d), m) for t, f, d in zip(curve.thresholds, curve.p_f, curve.p_d))
    return _write_rows(ROC_HEADER, rows)


def roc_from_csv(text: str) -> RocCurve:
    rows = read_rows(text, ROC_HEADER)
    if not rows:
        raise ParseError("ROC CSV has no rows")
    methods = {r[3] for r in rows}
    if len(methods) != 1:
        raise ParseError("ROC CSV mixes methods")
    try:
        method = RocMethod(methods.pop())
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    data = _floats(rows, (0, 1, 2))
    return RocCurve(data[:, 0], data[:, 1], data[:, 2], method)


# generic tables and JSON ----------------------------------------------------------

def table_to_csv(header, rows) -> str:
    """Numeric columns written losslessly; strings and ints pass through."""

    def cell(v):
        if isinstance(v, (float, np.floating)):
            return fmt(v)
        return str(v)

    return _write_rows(header, ([cell(v) for v in r] for r in rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def to_json(obj) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def overlap_to_json(result: OverlapResult) -> str:
    return to_json(result.to_dict())


def overlap_from_json(text: str) -> OverlapResult:
    return OverlapResult.from_dict(_load_json(text))


def plan_to_json(plan: BeamPlan) -> str:
    return to_json(plan.to_dict())


def plan_from_json(text: str) -> BeamPlan:
    return BeamPlan.from_dict(_load_json(text))


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
