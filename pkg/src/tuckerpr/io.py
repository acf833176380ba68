"""Frame-stack files and PGM image export.

Frame-stack layout (all integers little-endian)::

    offset  size  field
    0       4     magic  b"LRPR"
    4       1     version (1)
    5       1     dtype   0 = real float64, 1 = complex (re, im float64 pairs)
    6       4     n1  uint32
    10      4     n2  uint32
    14      4     q   uint32
    18      ...   payload, column-major (row index fastest, frame slowest)
"""
import struct

import numpy as np


__all__ = [
    "FrameStackError",
    "HEADER_SIZE",
    "encode_stack",
    "decode_stack",
    "write_stack",
    "read_stack",
    "scale_to_bytes",
    "encode_pgm",
    "export_pgm",
    "read_pgm",
]

MAGIC = b"LRPR"
VERSION = 1
_HEADER = struct.Struct("<4sBBIII")
HEADER_SIZE = _HEADER.size


class FrameStackError(ValueError):
    """Malformed frame-stack file; ``offset`` is the byte where parsing failed."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def encode_stack(X, complex=None):
    """Serialize an ``(n1, n2, q)`` array.

    ``complex=None`` writes a real payload when every imaginary part is zero.
    """
    X = np.asarray(X)
    if X.ndim != 3 or min(X.shape) < 1:
        raise ValueError(f"expected a non-empty (n1, n2, q) array, got {X.shape}")
    if complex is None:
        complex = np.iscomplexobj(X) and bool(np.any(X.imag))
    n1, n2, q = X.shape
    flat = X.reshape(-1, order="F")
    if complex:
        payload = np.empty(2 * flat.size, dtype="<f8")
        payload[0::2] = flat.real
        payload[1::2] = flat.imag
    else:
        if np.iscomplexobj(flat) and np.any(flat.imag):
            raise ValueError("refusing to drop nonzero imaginary parts")
        payload = np.asarray(flat.real, dtype="<f8")
    header = _HEADER.pack(MAGIC, VERSION, 1 if complex else 0, n1, n2, q)
    return header + payload.tobytes()


def decode_stack(data):
    """Parse frame-stack bytes into a complex ``(n1, n2, q)`` array."""
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise FrameStackError(
            f"truncated header: expected {HEADER_SIZE} bytes, got {len(data)}",
            len(data))
    magic, version, dtype, n1, n2, q = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FrameStackError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise FrameStackError(f"unsupported version {version}", 4)
    if dtype not in (0, 1):
        raise FrameStackError(f"unknown dtype code {dtype}", 5)
    for offset, (name, v) in zip((6, 10, 14), (("n1", n1), ("n2", n2), ("q", q))):
        if v == 0:
            raise FrameStackError(f"dimension {name} is zero", offset)
    count = n1 * n2 * q * (2 if dtype else 1)
    expected = count * 8
    actual = len(data) - HEADER_SIZE
    if actual != expected:
        raise FrameStackError(
            f"payload has {actual} bytes, expected {expected}",
            HEADER_SIZE + min(actual, expected))
    payload = np.frombuffer(data, dtype="<f8", count=count, offset=HEADER_SIZE)
    if dtype:
        flat = payload[0::2] + 1j * payload[1::2]
    else:
        flat = payload.astype(complex)
    return flat.reshape((n1, n2, q), order="F")


def write_stack(path, X, complex=None):
    with open(path, "wb") as fh:
        fh.write(encode_stack(X, complex))


def read_stack(path):
    with open(path, "rb") as fh:
        return decode_stack(fh.read())


def scale_to_bytes(frame):
    """Linearly map ``|frame|`` onto 0..255.

    Returns the uint8 image and the ``(min, max)`` magnitudes used.  A
    constant frame maps to mid-gray 128.
    """
    mag = np.abs(np.asarray(frame))
    lo, hi = float(mag.min()), float(mag.max())
    if hi <= lo:
        return np.full(mag.shape, 128, dtype=np.uint8), (lo, hi)
    img = np.floor((mag - lo) * (255.0 / (hi - lo)) + 0.5)
    return np.clip(img, 0, 255).astype(np.uint8), (lo, hi)


def encode_pgm(frame):
    img, scale = scale_to_bytes(frame)
    rows, cols = img.shape
    return b"P5\n%d %d\n255\n" % (cols, rows) + img.tobytes(), scale


def export_pgm(frame, path):
    """Write ``|frame|`` as a binary PGM with ``n1`` rows and ``n2`` columns."""
    frame = np.asarray(frame)
    if frame.ndim != 2 or min(frame.shape) < 1:
        raise ValueError(f"expected a non-empty 2-D frame, got {frame.shape}")
    data, scale = encode_pgm(frame)
    with open(path, "wb") as fh:
        fh.write(data)
    return scale


def read_pgm(path):
    """Minimal P5 reader (8-bit, no comments), for round-trip checks."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pixels = data[len(data) - rows * cols:]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(rows, cols)
