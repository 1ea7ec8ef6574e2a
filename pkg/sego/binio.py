# sego/binio.py
"""
Length-prefixed little-endian record codec.

A file is a magic tag, a record count, then one record per named array:

    u16 name length | name (utf-8) | u8 dtype code | u32 rows | u32 cols | payload

dtype code `f` stores `<f8`, code `i` stores `<i8`. Arrays are always 2-D.
"""

import struct

import numpy as np

from sego.exceptions import DataIntegrityError

_HEADER = struct.Struct("<8sI")
_RECORD = struct.Struct("<BII")

_DTYPES = {
    ord("f"): np.dtype("<f8"),
    ord("i"): np.dtype("<i8"),
}


def write_arrays(path, arrays, magic=b"SEGOBIN1"):
    """Write an ordered mapping name -> 2-D array."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, len(arrays)))
        for name, arr in arrays.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                arr = arr.reshape(1, -1)
            if arr.ndim != 2:
                raise ValueError(f"{name}: expected a 2-D array, got shape {arr.shape}")
            code = ord("i") if np.issubdtype(arr.dtype, np.integer) else ord("f")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(_RECORD.pack(code, arr.shape[0], arr.shape[1]))
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def read_arrays(path, magic=b"SEGOBIN1"):
    """Read back what `write_arrays` wrote, preserving record order."""
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < _HEADER.size:
        raise DataIntegrityError(f"{path}: truncated header")
    tag, count = _HEADER.unpack_from(data, 0)
    if tag != magic:
        raise DataIntegrityError(f"{path}: bad magic {tag!r}")

    offset = _HEADER.size
    arrays = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset:offset + name_len].decode("utf-8")
            offset += name_len
            code, rows, cols = _RECORD.unpack_from(data, offset)
            offset += _RECORD.size
            dtype = _DTYPES[code]
            nbytes = rows * cols * dtype.itemsize
            if offset + nbytes > len(data):
                raise DataIntegrityError(f"{path}: record {name!r} is truncated")
            if nbytes == 0:
                arrays[name] = np.zeros((rows, cols), dtype=dtype)
            else:
                arrays[name] = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=offset).reshape(rows, cols).copy()
            offset += nbytes
    except (struct.error, KeyError) as e:
        raise DataIntegrityError(f"{path}: corrupt record ({e})") from e
    return arrays
