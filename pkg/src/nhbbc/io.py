"""Deterministic CSV and JSON writers and the CSV schemas."""

from __future__ import annotations

import csv
import enum
import json
import math
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch

SCHEMAS = {
    "spectrum": ["k", "re_h", "im_h", "sigma", "phi_unwrapped"],
    "svd": ["index", "sigma", "k_label", "edge_flag", "loc_rate_left", "loc_rate_right"],
    "gssh": ["k", "E_minus", "E_plus"],
    "matrix": ["row", "col", "re", "im", "abs"],
    "histogram": ["k_bin_center", "sigma_bin_center", "count"],
    "profile": ["site"],
    "sweep": ["value", "winding", "nh_gap", "zsm_count", "forward_slope", "stable"],
    "gain": ["N", "forward_gain", "reverse_gain", "inverse_min_sigma", "stable"],
}


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, enum.Enum):
        return str(x.value)
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def read_csv(path, required=()):
    """Read a CSV into a dict of columns; numeric columns become float arrays.

    Raises
    ------
    SchemaMismatch
        Naming the first required column that is absent.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaMismatch(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for col in required:
        if col not in header:
            raise SchemaMismatch(f"{path}: missing column '{col}' (have {header})")
    cols = {}
    for i, h in enumerate(header):
        vals = [r[i] for r in rows[1:] if i < len(r)]
        try:
            cols[h] = np.array([float(v) for v in vals])
        except ValueError:
            cols[h] = np.array(vals, dtype=object)
    return cols


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [jsonable(x.real), jsonable(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def matrix_rows(m):
    n, k = m.shape
    for i in range(n):
        for j in range(k):
            z = m[i, j]
            yield (i + 1, j + 1, z.real, z.imag, abs(z))
