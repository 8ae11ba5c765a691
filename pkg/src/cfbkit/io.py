"""Report records, CSV grids and the dense binary matrix layout."""
from __future__ import annotations

import csv
import json
import struct
import threading
from pathlib import Path

import numpy as np

__all__ = [
    "MATRIX_MAGIC",
    "to_jsonable",
    "ReportWriter",
    "write_field_csv",
    "write_matrix",
    "read_matrix",
]

MATRIX_MAGIC = b"CFBMAT01"


def to_jsonable(obj):
    """Recursively convert numpy scalars, arrays, enums and complex numbers."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return to_jsonable(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


class ReportWriter:
    """Append-only line-delimited JSON report; one record per call.

    Writes go through a lock so concurrent tasks share a single appender.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("")
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(to_jsonable(record), sort_keys=True, allow_nan=False)
        with self._lock, self.path.open("a") as fh:
            fh.write(line + "\n")


def _f(x) -> str:
    return repr(float(x))


def write_field_csv(path, grid, values) -> None:
    """Columns ``re_w, im_w, re_value, im_value``; matrix values get ``_i_j`` suffixes."""
    grid = np.asarray(grid, dtype=complex)
    vals = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if vals.ndim == 1:
            w.writerow(["re_w", "im_w", "re_value", "im_value"])
            for z, v in zip(grid, vals):
                w.writerow([_f(z.real), _f(z.imag), _f(v.real), _f(v.imag)])
            return
        n, m = vals.shape[1:]
        head = ["re_w", "im_w"]
        for i in range(n):
            for j in range(m):
                head += [f"re_value_{i}_{j}", f"im_value_{i}_{j}"]
        w.writerow(head)
        for z, V in zip(grid, vals):
            row = [_f(z.real), _f(z.imag)]
            for x in V.ravel():
                row += [_f(x.real), _f(x.imag)]
            w.writerow(row)


def write_matrix(path, M) -> None:
    """Magic, little-endian ``uint64`` rows and columns, then row-major re/im ``f64`` pairs."""
    M = np.ascontiguousarray(np.asarray(M, dtype="<c16"))
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<QQ", *M.shape))
        fh.write(M.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(len(MATRIX_MAGIC)) != MATRIX_MAGIC:
            raise ValueError(f"{path} is not a matrix file")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} entries, found {data.size}")
    return data.reshape(rows, cols).copy()
