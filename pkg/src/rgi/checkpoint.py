"""Flat binary container for named float64 matrices.

Layout (little endian)::

    b"RGI1"  uint32 count
    repeat count times:
        uint32 name_len, name bytes (utf-8), uint32 rows, uint32 cols,
        rows*cols float64 values, row-major
"""

import struct

import numpy as np

from .errors import CheckpointError

MAGIC = b"RGI1"


def dumps(arrays):
    parts = [MAGIC, struct.pack("<I", len(arrays))]
    for name, a in arrays.items():
        a = np.asarray(a, dtype="<f8")
        if a.ndim != 2:
            raise CheckpointError(f"{name}: only 2-D matrices can be stored, got {a.shape}")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<II", *a.shape))
        parts.append(np.ascontiguousarray(a).tobytes())
    return b"".join(parts)


def loads(buf):
    if buf[:4] != MAGIC:
        raise CheckpointError("bad checkpoint header")
    try:
        (count,) = struct.unpack_from("<I", buf, 4)
        pos = 8
        out = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            name = buf[pos:pos + n].decode("utf-8")
            pos += n
            rows, cols = struct.unpack_from("<II", buf, pos)
            pos += 8
            size = rows * cols * 8
            if pos + size > len(buf):
                raise CheckpointError(f"truncated checkpoint while reading {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8", count=rows * cols,
                                      offset=pos).reshape(rows, cols).astype(np.float64)
            pos += size
    except struct.error as exc:
        raise CheckpointError(f"truncated checkpoint: {exc}") from None
    if pos != len(buf):
        raise CheckpointError(f"{len(buf) - pos} trailing bytes in checkpoint")
    return out


def save(path, arrays):
    with open(path, "wb") as fh:
        fh.write(dumps(arrays))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
