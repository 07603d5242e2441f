"""Strict readers for the repde output files.

Headers are validated exactly against the documented schemas before any
number is parsed: a figure must never silently plot the wrong column.
Trace files carry a fixed prefix (s, mass, K, sup, center) followed by one
lp_<p> column per configured exponent.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TABLES_HEADER = ["t", "h", "g", "E", "L"]
TABLES_S_HEADER = ["s", "Hprime", "H", "G"]
PREDICTIONS_HEADER = ["t", "E_pred_upper", "E_pred_lower"]
TRACE_PREFIX = ["s", "mass", "K", "sup", "center"]
CONVERGENCE_PREFIX = ["level", "intervals", "dr", "linf_error", "order"]
SWEEP_HEADER = [
    "param",
    "value",
    "fitted",
    "stderr",
    "r2",
    "verdict",
    "predicted_upper",
    "predicted_lower",
]
REPORT_KEYS = {"config_echo", "fitted", "predicted", "residuals", "verdict"}


class SchemaError(RuntimeError):
    """An input file is missing or does not match its documented schema."""


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise SchemaError(f"missing input file: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows


def _columns(path: Path, header, rows, numeric=None) -> dict[str, np.ndarray]:
    numeric = set(header) if numeric is None else set(numeric)
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        cells = [row[j] for row in rows]
        if name in numeric:
            try:
                out[name] = np.array([float(c) for c in cells])
            except ValueError as exc:
                raise SchemaError(f"{path}: non-numeric value in column {name}: {exc}")
        else:
            out[name] = np.array(cells)
    return out


def read_exact(path: str | Path, expected: list[str], numeric=None):
    path = Path(path)
    header, rows = _read_rows(path)
    if header != expected:
        raise SchemaError(
            f"{path}: header mismatch; expected {','.join(expected)} "
            f"got {','.join(header)}"
        )
    return _columns(path, header, rows, numeric)


def read_tables(path: str | Path):
    return read_exact(path, TABLES_HEADER)


def read_predictions(path: str | Path):
    return read_exact(path, PREDICTIONS_HEADER)


def read_trace(path: str | Path):
    path = Path(path)
    header, rows = _read_rows(path)
    if header[: len(TRACE_PREFIX)] != TRACE_PREFIX or not all(
        name.startswith("lp_") for name in header[len(TRACE_PREFIX) :]
    ):
        raise SchemaError(
            f"{path}: header mismatch; expected {','.join(TRACE_PREFIX)} "
            f"plus lp_<p> columns, got {','.join(header)}"
        )
    return _columns(path, header, rows)


def read_convergence(path: str | Path):
    path = Path(path)
    header, rows = _read_rows(path)
    if header[: len(CONVERGENCE_PREFIX)] != CONVERGENCE_PREFIX:
        raise SchemaError(
            f"{path}: header mismatch; expected prefix "
            f"{','.join(CONVERGENCE_PREFIX)}, got {','.join(header)}"
        )
    return _columns(path, header, rows)


def read_sweep_summary(path: str | Path):
    return read_exact(
        path, SWEEP_HEADER, numeric=set(SWEEP_HEADER) - {"param", "verdict"}
    )


def read_report(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"missing input file: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}")
    missing = REPORT_KEYS - set(data)
    if missing:
        raise SchemaError(f"{path}: report missing keys {sorted(missing)}")
    return data
