# cython: boundscheck=False, wraparound=False
"""Compiled byte codec kernel (hot path for envelope encode/decode).

Keep in lockstep with crdtkit._codec_py; the test suite asserts byte parity.
"""

from crdtkit._codec_py import CodecError

BACKEND = "compiled"

ENVELOPE_MAGIC = 0x43
ENVELOPE_VERSION = 0x01


cpdef void uvarint_append(buf, value):
    cdef unsigned long long v
    if value < 0:
        raise CodecError("varint value must be non-negative")
    v = value
    while True:
        if v >= 0x80:
            buf.append(<unsigned char> ((v & 0x7F) | 0x80))
            v >>= 7
        else:
            buf.append(<unsigned char> v)
            return


cpdef tuple uvarint_read(const unsigned char[:] data, Py_ssize_t pos):
    cdef unsigned long long result = 0
    cdef int shift = 0
    cdef Py_ssize_t n = data.shape[0]
    cdef unsigned char byte
    while True:
        if pos >= n:
            raise CodecError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (<unsigned long long> (byte & 0x7F)) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise CodecError("varint too long")


cpdef void bytes_append(buf, bytes value):
    uvarint_append(buf, len(value))
    buf += value


cpdef tuple bytes_read(bytes data, Py_ssize_t pos):
    cdef Py_ssize_t length, end
    length, pos = uvarint_read(data, pos)
    end = pos + length
    if end > len(data):
        raise CodecError("truncated bytes field")
    return data[pos:end], end


cpdef void str_append(buf, str value):
    bytes_append(buf, value.encode("utf-8"))


cpdef tuple str_read(bytes data, Py_ssize_t pos):
    raw, pos = bytes_read(data, pos)
    return raw.decode("utf-8"), pos


def encode_envelope(str sender, counter, lamport, deps, path, bytes payload):
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


def decode_envelope(bytes data):
    cdef Py_ssize_t pos
    cdef Py_ssize_t i
    if len(data) < 2 or data[0] != ENVELOPE_MAGIC or data[1] != ENVELOPE_VERSION:
        raise CodecError("bad envelope header")
    pos = 2
    sender, pos = str_read(data, pos)
    counter, pos = uvarint_read(data, pos)
    lamport, pos = uvarint_read(data, pos)
    dep_count, pos = uvarint_read(data, pos)
    deps = []
    for i in range(dep_count):
        dep_id, pos = str_read(data, pos)
        dep_counter, pos = uvarint_read(data, pos)
        deps.append((dep_id, dep_counter))
    seg_count, pos = uvarint_read(data, pos)
    segments = []
    for i in range(seg_count):
        segment, pos = str_read(data, pos)
        segments.append(segment)
    payload, pos = bytes_read(data, pos)
    if pos != len(data):
        raise CodecError("trailing bytes after envelope")
    return sender, counter, lamport, deps, tuple(segments), payload
