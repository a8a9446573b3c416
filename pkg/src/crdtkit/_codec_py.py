"""Pure-Python byte codec kernel.

Mirrors the API of the compiled ``crdtkit._codec`` extension; one of the two
is selected at import time by :mod:`crdtkit.codec`. All multi-byte integers
are unsigned LEB128 varints; variable fields are length-prefixed.
"""

from __future__ import annotations

BACKEND = "python"

ENVELOPE_MAGIC = 0x43
ENVELOPE_VERSION = 0x01


class CodecError(ValueError):
    pass


def uvarint_append(buf: bytearray, value: int) -> None:
    if value < 0:
        raise CodecError("varint value must be non-negative")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def uvarint_read(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    n = len(data)
    while True:
        if pos >= n:
            raise CodecError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise CodecError("varint too long")


def bytes_append(buf: bytearray, value: bytes) -> None:
    uvarint_append(buf, len(value))
    buf += value


def bytes_read(data: bytes, pos: int) -> tuple[bytes, int]:
    length, pos = uvarint_read(data, pos)
    end = pos + length
    if end > len(data):
        raise CodecError("truncated bytes field")
    return data[pos:end], end


def str_append(buf: bytearray, value: str) -> None:
    bytes_append(buf, value.encode("utf-8"))


def str_read(data: bytes, pos: int) -> tuple[str, int]:
    raw, pos = bytes_read(data, pos)
    return raw.decode("utf-8"), pos


def encode_envelope(
    sender: str,
    counter: int,
    lamport: int,
    deps: list[tuple[str, int]],
    path: tuple[str, ...],
    payload: bytes,
) -> bytes:
    buf = bytearray((ENVELOPE_MAGIC, ENVELOPE_VERSION))
    str_append(buf, sender)
    uvarint_append(buf, counter)
    uvarint_append(buf, lamport)
    uvarint_append(buf, len(deps))
    for dep_id, dep_counter in deps:
        str_append(buf, dep_id)
        uvarint_append(buf, dep_counter)
    uvarint_append(buf, len(path))
    for segment in path:
        str_append(buf, segment)
    bytes_append(buf, payload)
    return bytes(buf)


def decode_envelope(
    data: bytes,
) -> tuple[str, int, int, list[tuple[str, int]], tuple[str, ...], bytes]:
    if len(data) < 2 or data[0] != ENVELOPE_MAGIC or data[1] != ENVELOPE_VERSION:
        raise CodecError("bad envelope header")
    pos = 2
    sender, pos = str_read(data, pos)
    counter, pos = uvarint_read(data, pos)
    lamport, pos = uvarint_read(data, pos)
    dep_count, pos = uvarint_read(data, pos)
    deps = []
    for _ in range(dep_count):
        dep_id, pos = str_read(data, pos)
        dep_counter, pos = uvarint_read(data, pos)
        deps.append((dep_id, dep_counter))
    seg_count, pos = uvarint_read(data, pos)
    segments = []
    for _ in range(seg_count):
        segment, pos = str_read(data, pos)
        segments.append(segment)
    payload, pos = bytes_read(data, pos)
    if pos != len(data):
        raise CodecError("trailing bytes after envelope")
    return sender, counter, lamport, deps, tuple(segments), payload
