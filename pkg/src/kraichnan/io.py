"""Binary snapshots, CSV tables and checksums.

Snapshot layout (little endian): a 32-byte header

    magic b"KRSN" | version u32 | N u32 | kind u32 | L f64 | time f64

followed by row-major float64 data. ``kind`` 0 is an N x N grid field,
``kind`` 1 a (2K+1)^2 spectral lattice (N then holds 2K+1).
"""

import csv
import hashlib
import struct

import numpy as np

from .errors import ConfigError

MAGIC = b"KRSN"
VERSION = 1
HEADER = struct.Struct("<4sIIIdd")
KIND_GRID = 0
KIND_LATTICE = 1


def write_snapshot(path, data, L, time, kind=KIND_GRID):
    data = np.ascontiguousarray(data, dtype="<f8")
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ConfigError(f"snapshot data must be square, got shape {data.shape}")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, data.shape[0], kind, float(L), float(time)))
        fh.write(data.tobytes())


def read_snapshot(path):
    """Returns (data, L, time, kind)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ConfigError(f"{path}: truncated snapshot")
    magic, version, n, kind, L, time = HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ConfigError(f"{path}: not a version {VERSION} snapshot")
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER.size)
    if data.size != n * n:
        raise ConfigError(f"{path}: expected {n * n} values, found {data.size}")
    return data.reshape(n, n).copy(), L, time, kind


def fmt(x):
    """Round-trip representation of a float."""
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path):
    """Returns (header, float array of rows)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
