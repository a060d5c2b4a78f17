"""Binary tensor containers: LVFT (features), LVPW (projection), LVCR (output).

All three share one layout idea: a fixed little-endian header followed by raw
float32 little-endian payload, written row-major. Byte layouts (offsets in
bytes, all integers little-endian):

LVFT v1 (27-byte header):
    0  magic     4s   "LVFT"
    4  version   u16  1
    6  dtype     u8   0 (float32 LE)
    7  T         u32  frames
    11 N         u32  patch tokens per frame
    15 d         u32  channels
    19 L_enc     u32  stored encoder layers
    23 flags     u32  must be 0 in v1 (bit 0 reserved for provenance hints)
    27 patch_tokens: T*N*d floats in (t, n, c) order,
       then cls_tokens: T*L_enc*d floats in (t, layer, c) order.

LVPW v1 (19-byte header): magic "LVPW", version u16, dtype u8,
    d_out u32, d u32, flags u32; payload d_out*d matrix floats (row-major)
    then d_out bias floats.

LVCR v1 (19-byte header): magic "LVCR", version u16, dtype u8,
    rows u32, d u32, flags u32; payload rows*d floats (row-major).

Readers reject anything that deviates (magic, version, dtype, reserved flags,
zero extents, payload byte count, non-finite values) without ever allocating
from untrusted extents, so fuzzed headers fail cleanly.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import (
    BadMagic,
    InvalidHeader,
    NonFiniteValue,
    TruncatedPayload,
    UnsupportedVersion,
)
from .types import VideoFeatures

LVFT_MAGIC = b"LVFT"
LVPW_MAGIC = b"LVPW"
LVCR_MAGIC = b"LVCR"
VERSION = 1
DTYPE_FLOAT32 = 0

_LVFT_HEADER = struct.Struct("<4sHBIIIII")
_MAT_HEADER = struct.Struct("<4sHBIII")  # shared by LVPW and LVCR

_U32_MAX = 2 ** 32 - 1


def _read_all(stream) -> bytes:
    if isinstance(stream, (bytes, bytearray, memoryview)):
        return bytes(stream)
    return stream.read()


def _check_prefix(data: bytes, magic: bytes, header_size: int) -> None:
    if data[:4] != magic:
        raise BadMagic(f"expected magic {magic!r}, got {data[:4]!r}")
    if len(data) < header_size:
        raise TruncatedPayload(
            f"header needs {header_size} bytes, stream has {len(data)}"
        )


def _check_version(version: int, dtype_code: int, flags: int) -> None:
    if version != VERSION:
        raise UnsupportedVersion(f"version {version} not supported (expected {VERSION})")
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedVersion(f"dtype code {dtype_code} not supported in v1")
    if flags != 0:
        # bit 0 is reserved (provenance hints) and the rest are undefined,
        # so v1 readers reject any nonzero flag bits outright
        raise UnsupportedVersion(f"flags {flags:#x} must be 0 in v1")


def _payload(data: bytes, header_size: int, num_floats: int) -> np.ndarray:
    expected = 4 * num_floats
    actual = len(data) - header_size
    if actual != expected:
        raise TruncatedPayload(
            f"payload holds {actual} bytes, header implies {expected}"
        )
    return np.frombuffer(data, dtype="<f4", count=num_floats, offset=header_size)


def read_features(stream) -> VideoFeatures:
    """Parse an LVFT v1 container from a binary stream (or raw bytes)."""
    data = _read_all(stream)
    _check_prefix(data, LVFT_MAGIC, _LVFT_HEADER.size)
    _, version, dtype_code, t, n, d, layers, flags = _LVFT_HEADER.unpack_from(data)
    _check_version(version, dtype_code, flags)
    if min(t, n, d, layers) < 1:
        raise InvalidHeader(f"zero extent in header: T={t} N={n} d={d} L_enc={layers}")
    patch_count = t * n * d
    cls_count = t * layers * d
    raw = _payload(data, _LVFT_HEADER.size, patch_count + cls_count)
    patch = raw[:patch_count].reshape(t, n, d)
    cls = raw[patch_count:].reshape(t, layers, d)
    return VideoFeatures(patch, cls)


def write_features(features: VideoFeatures, sink: BinaryIO) -> int:
    """Serialize to LVFT v1; returns the number of bytes written."""
    t, n, d, layers = features.shape
    if max(t, n, d, layers) > _U32_MAX:
        raise InvalidHeader("extent exceeds u32 range")
    header = _LVFT_HEADER.pack(LVFT_MAGIC, VERSION, DTYPE_FLOAT32, t, n, d, layers, 0)
    sink.write(header)
    patch = np.ascontiguousarray(features.patch_tokens, dtype="<f4")
    cls = np.ascontiguousarray(features.cls_tokens, dtype="<f4")
    sink.write(patch.tobytes())
    sink.write(cls.tobytes())
    return len(header) + 4 * (patch.size + cls.size)


def read_projection(stream) -> tuple[np.ndarray, np.ndarray]:
    """Parse an LVPW v1 container; returns (matrix (d_out, d), bias (d_out,))."""
    data = _read_all(stream)
    _check_prefix(data, LVPW_MAGIC, _MAT_HEADER.size)
    _, version, dtype_code, d_out, d, flags = _MAT_HEADER.unpack_from(data)
    _check_version(version, dtype_code, flags)
    if min(d_out, d) < 1:
        raise InvalidHeader(f"zero extent in header: d_out={d_out} d={d}")
    raw = _payload(data, _MAT_HEADER.size, d_out * d + d_out)
    matrix = raw[:d_out * d].reshape(d_out, d)
    bias = raw[d_out * d:]
    for name, array in (("matrix", matrix), ("bias", bias)):
        if not np.isfinite(array).all():
            index = tuple(int(i) for i in np.argwhere(~np.isfinite(array))[0])
            raise NonFiniteValue(name, index)
    return matrix, bias


def write_projection(matrix: np.ndarray, bias: np.ndarray, sink: BinaryIO) -> int:
    d_out, d = matrix.shape
    if bias.shape != (d_out,):
        raise InvalidHeader(f"bias shape {bias.shape} does not match d_out={d_out}")
    header = _MAT_HEADER.pack(LVPW_MAGIC, VERSION, DTYPE_FLOAT32, d_out, d, 0)
    sink.write(header)
    sink.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
    sink.write(np.ascontiguousarray(bias, dtype="<f4").tobytes())
    return len(header) + 4 * (d_out * d + d_out)


def read_compressed(stream) -> np.ndarray:
    """Parse an LVCR v1 container; returns the (rows, d) float32 token array."""
    data = _read_all(stream)
    _check_prefix(data, LVCR_MAGIC, _MAT_HEADER.size)
    _, version, dtype_code, rows, d, flags = _MAT_HEADER.unpack_from(data)
    _check_version(version, dtype_code, flags)
    if min(rows, d) < 1:
        raise InvalidHeader(f"zero extent in header: rows={rows} d={d}")
    raw = _payload(data, _MAT_HEADER.size, rows * d)
    out = raw.reshape(rows, d)
    if not np.isfinite(out).all():
        index = tuple(int(i) for i in np.argwhere(~np.isfinite(out))[0])
        raise NonFiniteValue("rows", index)
    return out


def write_compressed(rows: np.ndarray, sink: BinaryIO) -> int:
    if rows.ndim != 2:
        raise InvalidHeader("compressed token array must be two-dimensional")
    header = _MAT_HEADER.pack(LVCR_MAGIC, VERSION, DTYPE_FLOAT32,
                              rows.shape[0], rows.shape[1], 0)
    sink.write(header)
    sink.write(np.ascontiguousarray(rows, dtype="<f4").tobytes())
    return len(header) + 4 * rows.size
