"""Canonical hashing of observable state.

Digests cover application-visible values only (no dots, clocks, or
positions), so replicas that have incorporated the same operations hash
identically regardless of metadata representation.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Any


def canonical_bytes(value: Any) -> bytes:
    buf = bytearray()
    _write(buf, value)
    return bytes(buf)


def digest_hex(value: Any) -> str:
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


def _write(buf: bytearray, value: Any) -> None:
    if value is None:
        buf += b"N"
    elif value is True:
        buf += b"T"
    elif value is False:
        buf += b"F"
    elif isinstance(value, int):
        buf += b"i"
        raw = str(value).encode("ascii")
        buf += struct.pack(">I", len(raw))
        buf += raw
    elif isinstance(value, float):
        buf += b"d"
        buf += struct.pack(">d", value)
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        buf += b"s"
        buf += struct.pack(">I", len(raw))
        buf += raw
    elif isinstance(value, bytes):
        buf += b"b"
        buf += struct.pack(">I", len(value))
        buf += value
    elif isinstance(value, (list, tuple)):
        buf += b"l"
        buf += struct.pack(">I", len(value))
        for item in value:
            _write(buf, item)
    elif isinstance(value, dict):
        buf += b"m"
        buf += struct.pack(">I", len(value))
        for key in sorted(value):
            _write(buf, key)
            _write(buf, value[key])
    else:
        raise TypeError(f"not canonically encodable: {type(value).__name__}")
