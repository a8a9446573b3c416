"""Codec backend selection plus shared value/structure encoding helpers.

The byte-level kernel (varints, length-prefixed fields, envelope framing)
exists twice: as a Cython extension and as a pure-Python module with the same
API. The compiled one is preferred; set ``CRDTKIT_PURE=1`` to force the
fallback. ``crdtkit bench-codec`` compares the two.
"""

from __future__ import annotations

import os
import struct
from typing import Any

from . import _codec_py

if os.environ.get("CRDTKIT_PURE"):
    _kernel = _codec_py
else:
    try:
        from . import _codec as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _codec_py

BACKEND: str = _kernel.BACKEND
CodecError = _codec_py.CodecError

uvarint_append = _kernel.uvarint_append
uvarint_read = _kernel.uvarint_read
bytes_read = _kernel.bytes_read
str_read = _kernel.str_read
encode_envelope = _kernel.encode_envelope
decode_envelope = _kernel.decode_envelope


def zigzag(n: int) -> int:
    return (n << 1) ^ (n >> 63) if n < 0 else n << 1


def unzigzag(z: int) -> int:
    return (z >> 1) ^ -(z & 1)


class Writer:
    """Append-only builder over the kernel primitives."""

    __slots__ = ("buf",)

    def __init__(self) -> None:
        self.buf = bytearray()

    def uint(self, value: int) -> None:
        uvarint_append(self.buf, value)

    def sint(self, value: int) -> None:
        uvarint_append(self.buf, zigzag(value))

    def byte(self, value: int) -> None:
        self.buf.append(value)

    def f64(self, value: float) -> None:
        self.buf += struct.pack(">d", value)

    def bytes(self, value: bytes) -> None:
        uvarint_append(self.buf, len(value))
        self.buf += value

    def str(self, value: str) -> None:
        self.bytes(value.encode("utf-8"))

    def getvalue(self) -> bytes:
        return bytes(self.buf)


class Reader:
    """Cursor-based decoder matching :class:`Writer`."""

    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def uint(self) -> int:
        value, self.pos = uvarint_read(self.data, self.pos)
        return value

    def sint(self) -> int:
        return unzigzag(self.uint())

    def byte(self) -> int:
        if self.pos >= len(self.data):
            raise CodecError("truncated byte")
        value = self.data[self.pos]
        self.pos += 1
        return value

    def f64(self) -> float:
        end = self.pos + 8
        if end > len(self.data):
            raise CodecError("truncated float")
        (value,) = struct.unpack(">d", self.data[self.pos : end])
        self.pos = end
        return value

    def bytes(self) -> bytes:
        value, self.pos = bytes_read(self.data, self.pos)
        return value

    def str(self) -> str:
        value, self.pos = str_read(self.data, self.pos)
        return value

    def done(self) -> bool:
        return self.pos == len(self.data)

    def expect_done(self) -> None:
        if self.pos != len(self.data):
            raise CodecError("trailing bytes")


# Tagged encoding for plain values (register contents, list elements, args).
_T_NONE, _T_FALSE, _T_TRUE, _T_INT, _T_FLOAT, _T_STR, _T_BYTES, _T_LIST = range(8)


def write_value(w: Writer, value: Any) -> None:
    if value is None:
        w.byte(_T_NONE)
    elif value is False:
        w.byte(_T_FALSE)
    elif value is True:
        w.byte(_T_TRUE)
    elif isinstance(value, int):
        w.byte(_T_INT)
        w.sint(value)
    elif isinstance(value, float):
        w.byte(_T_FLOAT)
        w.f64(value)
    elif isinstance(value, str):
        w.byte(_T_STR)
        w.str(value)
    elif isinstance(value, bytes):
        w.byte(_T_BYTES)
        w.bytes(value)
    elif isinstance(value, (list, tuple)):
        w.byte(_T_LIST)
        w.uint(len(value))
        for item in value:
            write_value(w, item)
    else:
        raise CodecError(f"unsupported value type: {type(value).__name__}")


def read_value(r: Reader) -> Any:
    tag = r.byte()
    if tag == _T_NONE:
        return None
    if tag == _T_FALSE:
        return False
    if tag == _T_TRUE:
        return True
    if tag == _T_INT:
        return r.sint()
    if tag == _T_FLOAT:
        return r.f64()
    if tag == _T_STR:
        return r.str()
    if tag == _T_BYTES:
        return r.bytes()
    if tag == _T_LIST:
        return [read_value(r) for _ in range(r.uint())]
    raise CodecError(f"unknown value tag {tag}")


def encode_value(value: Any) -> bytes:
    w = Writer()
    write_value(w, value)
    return w.getvalue()


def decode_value(data: bytes) -> Any:
    r = Reader(data)
    value = read_value(r)
    r.expect_done()
    return value
