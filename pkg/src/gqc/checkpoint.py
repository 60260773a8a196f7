"""Binary checkpoint files: a flat list of named float64 arrays plus JSON metadata.

Layout (all integers little-endian)::

    magic      8 bytes   b"GQCCKPT\\0"
    version    uint32    currently 1
    meta_len   uint32    byte length of the metadata block
    metadata   meta_len  UTF-8 JSON object, keys sorted
    count      uint32    number of arrays
    count times:
        name_len  uint16
        name      name_len bytes, UTF-8
        ndim      uint8
        shape     ndim x uint64
        data      prod(shape) x float64, C order

Arrays are written in the order given, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .exceptions import ParseError

MAGIC = b"GQCCKPT\x00"
VERSION = 1


def save_arrays(path, arrays, metadata=None):
    """Write ``arrays`` (mapping name -> array) and ``metadata`` to ``path``."""
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype="<f8")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw_name)) + raw_name)
        chunks.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_arrays(path):
    """Read a checkpoint; returns ``(arrays, metadata)``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != MAGIC:
        raise ParseError(f"{path}: not a checkpoint file")
    if len(buf) < 16:
        raise ParseError(f"{path}: truncated checkpoint header")
    version, meta_len = struct.unpack_from("<II", buf, 8)
    if version != VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    try:
        pos = 16
        metadata = json.loads(buf[pos : pos + meta_len].decode("utf-8"))
        pos += meta_len
        (count,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        arrays = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}Q", buf, pos)
            pos += 8 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            arrays[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape).copy()
            pos += 8 * size
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: truncated or corrupt checkpoint ({exc})") from exc
    if pos != len(buf):
        raise ParseError(f"{path}: {len(buf) - pos} trailing bytes")
    return arrays, metadata
