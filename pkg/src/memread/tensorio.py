"""STF1 binary tensors and deterministic CSV output.

STF1 layout, all little-endian::

    b"STF1" | rank: u32 | dims: rank x u32 | payload: prod(dims) x f32, row-major

Rank is 1, 2 or 3.
"""
from __future__ import annotations

import csv
import io
import math
import os
import struct
from numbers import Integral, Real
from typing import Mapping, Sequence

import numpy as np

from memread.errors import FormatError

MAGIC = b"STF1"
_U32 = struct.Struct("<I")
_F32_LE = np.dtype("<f4")


def encode_tensor(array) -> bytes:
    arr = np.asarray(array)
    if arr.ndim not in (1, 2, 3):
        raise ValueError(f"STF1 supports rank 1-3, got rank {arr.ndim}")
    if any(d >= 2**32 for d in arr.shape):
        raise ValueError(f"dimension too large for u32: {arr.shape}")
    header = MAGIC + _U32.pack(arr.ndim) + b"".join(_U32.pack(d) for d in arr.shape)
    return header + np.ascontiguousarray(arr, dtype=_F32_LE).tobytes()


def decode_tensor(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(blob) < 8:
        raise FormatError(f"{source}: file too short for an STF1 header ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise FormatError(f"{source}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    (rank,) = _U32.unpack_from(blob, 4)
    if rank not in (1, 2, 3):
        raise FormatError(f"{source}: unsupported rank {rank}")
    header_len = 8 + 4 * rank
    if len(blob) < header_len:
        raise FormatError(f"{source}: header truncated, expected {header_len} bytes")
    dims = tuple(_U32.unpack_from(blob, 8 + 4 * i)[0] for i in range(rank))
    expected = math.prod(dims) * 4
    actual = len(blob) - header_len
    if actual != expected:
        raise FormatError(
            f"{source}: payload is {actual} bytes, expected {expected} for shape {dims}"
        )
    data = np.frombuffer(blob, dtype=_F32_LE, offset=header_len).reshape(dims)
    return data.astype(np.float32)


def write_tensor(path, array) -> None:
    blob = encode_tensor(array)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write tensor to {os.fspath(path)}: {exc.strerror}",
                      os.fspath(path)) from exc


def read_tensor(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read tensor from {os.fspath(path)}: {exc.strerror}",
                      os.fspath(path)) from exc
    return decode_tensor(blob, os.fspath(path))


def format_value(value) -> str:
    """Integers verbatim, floats with 9 significant digits, everything else str()."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (Integral, np.integer)):
        return str(int(value))
    if isinstance(value, (Real, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def csv_text(columns: Mapping[str, Sequence]) -> str:
    buf = io.StringIO()
    _write_csv_rows(buf, columns)
    return buf.getvalue()


def _write_csv_rows(fh, columns: Mapping[str, Sequence]):
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        detail = ", ".join(f"{n}={len(c)}" for n, c in zip(names, cols))
        raise ValueError(f"ragged columns: {detail}")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*cols):
        writer.writerow([format_value(v) for v in row])


def write_csv(path, columns: Mapping[str, Sequence]) -> None:
    """Header row then one row per index; ``columns`` maps name -> values."""
    text = csv_text(columns)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {os.fspath(path)}: {exc.strerror}",
                      os.fspath(path)) from exc


def rows_to_columns(rows: Sequence[Mapping]) -> dict:
    if not rows:
        return {}
    return {name: [r[name] for r in rows] for name in rows[0]}
