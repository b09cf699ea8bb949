"""Measure CSV files and JSON sidecars.

A measure file has the header ``x1,...,xd,w_re,w_im`` and one atom per row.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .measures import DiscreteMeasure, MeasureError


class MeasureFileError(MeasureError):
    """A measure file that cannot be parsed; message carries the line number."""


def write_measure_csv(m: DiscreteMeasure, path) -> Path:
    path = Path(path)
    header = [f"x{i + 1}" for i in range(m.dim)] + ["w_re", "w_im"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for x, w in zip(m.atoms, m.weights):
            writer.writerow([repr(float(c)) for c in x] + [repr(float(w.real)), repr(float(w.imag))])
    return path


def read_measure_csv(path) -> DiscreteMeasure:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MeasureFileError(f"{path}:1: missing header") from None
        header = [h.strip() for h in header]
        d = len(header) - 2
        expected = [f"x{i + 1}" for i in range(d)] + ["w_re", "w_im"]
        if d < 2 or header != expected:
            raise MeasureFileError(
                f"{path}:1: header must be {','.join(expected if d >= 2 else ['x1', 'x2', 'w_re', 'w_im'])}")
        rows, weights, seen = [], [], {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + 2:
                raise MeasureFileError(f"{path}:{lineno}: expected {d + 2} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise MeasureFileError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise MeasureFileError(f"{path}:{lineno}: non-finite value")
            key = tuple(vals[:d])
            if key in seen:
                raise MeasureFileError(
                    f"{path}:{lineno}: duplicate point (first seen on line {seen[key]})")
            seen[key] = lineno
            rows.append(vals[:d])
            weights.append(complex(vals[d], vals[d + 1]))
    atoms = np.array(rows, dtype=float).reshape(-1, d)
    return DiscreteMeasure(atoms, np.array(weights, dtype=complex), d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)
