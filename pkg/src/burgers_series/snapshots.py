"""Binary field snapshots and the CSV tables written by the CLI.

Snapshot layout (little-endian)::

    magic  b"BPFX"
    u32    format version (1)
    u32    n
    u32    points_per_axis
    u32    component count
    f64    nu
    f64    time_tag
    f64[]  components, row-major over (component, i_1, ..., i_n)
"""

from __future__ import annotations

import csv
import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .fields import VectorField, make_grid

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "encode_snapshot",
    "decode_snapshot",
    "write_snapshot",
    "read_snapshot",
    "sha256_file",
    "write_csv",
    "read_csv",
]

MAGIC = b"BPFX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")


class SnapshotFormatError(ConfigurationError):
    """File is not a valid snapshot."""


def encode_snapshot(field: VectorField, nu: float) -> bytes:
    g = field.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, g.n, g.points_per_axis, field.ncomp,
                          float(nu), field.time_tag)
    return header + np.ascontiguousarray(field.components, dtype="<f8").tobytes()


def decode_snapshot(data: bytes) -> tuple[VectorField, float]:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("snapshot shorter than its header")
    magic, version, n, N, ncomp, nu, tag = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise SnapshotFormatError(f"unsupported format version {version}")
    grid = make_grid(n, N)
    expected = ncomp * grid.size * 8
    body = data[_HEADER.size:]
    if len(body) != expected:
        raise SnapshotFormatError(f"payload has {len(body)} bytes, expected {expected}")
    comps = np.frombuffer(body, dtype="<f8").reshape((ncomp,) + grid.shape)
    return VectorField(grid, comps, tag), nu


def write_snapshot(path, field: VectorField, nu: float) -> None:
    Path(path).write_bytes(encode_snapshot(field, nu))


def read_snapshot(path) -> tuple[VectorField, float]:
    return decode_snapshot(Path(path).read_bytes())


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
