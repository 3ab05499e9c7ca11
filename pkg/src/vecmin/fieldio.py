"""Binary field files, trace CSVs and atomic writes.

Field file layout (all little-endian)::

    b"VFLD1" | u32 version | u32 N | u32 m | u32 M | f64 L | m * M**N f64 values

Values are stored row-major: component first, then the grid axes.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .field import VectorField
from .grid import make_grid

__all__ = ["MAGIC", "VERSION", "TRACE_COLUMNS", "encode_field", "decode_field", "write_field", "read_field", "trace_csv", "atomic_write"]

MAGIC = b"VFLD1"
VERSION = 1
_HEADER = struct.Struct("<IIIId")
TRACE_COLUMNS = ("iter", "energy", "kinetic", "potential", "mass_error", "residual", "tau")


def encode_field(u: VectorField) -> bytes:
    g = u.grid
    head = MAGIC + _HEADER.pack(VERSION, g.dim, u.m, g.points, g.half_length)
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def decode_field(data: bytes) -> VectorField:
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError("not a VFLD1 field file")
    off = len(MAGIC)
    if len(data) < off + _HEADER.size:
        raise ValueError("truncated field header")
    version, N, m, M, L = _HEADER.unpack_from(data, off)
    if version != VERSION:
        raise ValueError(f"unsupported field file version {version}")
    grid = make_grid(N, M, L)
    count = m * M**N
    body = data[off + _HEADER.size :]
    if len(body) != 8 * count:
        raise ValueError(f"field body holds {len(body)} bytes, expected {8 * count}")
    vals = np.frombuffer(body, dtype="<f8").astype(float).reshape((m,) + grid.shape)
    return VectorField(grid, vals)


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_field(path, u: VectorField) -> Path:
    return atomic_write(path, encode_field(u))


def read_field(path) -> VectorField:
    return decode_field(Path(path).read_bytes())


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def trace_csv(rows, columns=TRACE_COLUMNS) -> str:
    """CSV text with floats at 17 significant digits (lossless for doubles)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()
