"""Wire-format tests: varints, envelope layout, backend parity, containers."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crdtkit import _codec_py, codec
from crdtkit.envelope import (
    MessageEnvelope,
    decode_batch,
    decode_line,
    encode_batch,
    encode_line,
)
from crdtkit.errors import DecodeError
from crdtkit.ids import Dot

try:
    from crdtkit import _codec

    BACKENDS = [_codec_py, _codec]
except ImportError:  # compiled extension unavailable in this environment
    _codec = None
    BACKENDS = [_codec_py]


@pytest.mark.parametrize("kernel", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize(
    "value,expected",
    [
        (0, b"\x00"),
        (1, b"\x01"),
        (127, b"\x7f"),
        (128, b"\x80\x01"),
        (300, b"\xac\x02"),
        (2**32, b"\x80\x80\x80\x80\x10"),
    ],
)
def test_uvarint_vectors(kernel, value, expected):
    buf = bytearray()
    kernel.uvarint_append(buf, value)
    assert bytes(buf) == expected
    decoded, pos = kernel.uvarint_read(bytes(buf), 0)
    assert decoded == value and pos == len(expected)


@pytest.mark.parametrize("kernel", BACKENDS, ids=lambda m: m.BACKEND)
def test_uvarint_truncated(kernel):
    with pytest.raises(ValueError):
        kernel.uvarint_read(b"\x80", 0)


def test_envelope_exact_wire_bytes():
    # magic, version, sender id, counter, lamport, dep count, path, payload
    env = MessageEnvelope(Dot("a", 1), 1, (), ("c",), b"+1")
    assert env.encode() == bytes.fromhex("43010161010100010163022b31")


def test_envelope_with_deps_wire_bytes():
    env = MessageEnvelope(
        Dot("a", 2), 7, (Dot("b", 3), Dot("c", 1)), ("x", "y"), b"\x00"
    )
    expected = bytes.fromhex(
        "4301"  # magic, version
        "0161"  # sender "a"
        "02"  # counter 2
        "07"  # lamport 7
        "02" + "016203" + "016301"  # deps (b,3) (c,1)
        "02" + "0178" + "0179"  # path x, y
        "0100"  # payload
    )
    assert env.encode() == expected
    assert MessageEnvelope.decode(expected) == env


_ids = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=12
)


@st.composite
def envelopes(draw):
    sender = draw(_ids)
    dep_ids = draw(st.lists(_ids.filter(lambda r: r != sender), max_size=3, unique=True))
    deps = tuple(Dot(r, draw(st.integers(1, 2**40))) for r in dep_ids)
    path = tuple(draw(st.lists(st.text(min_size=1, max_size=8), min_size=1, max_size=4)))
    return MessageEnvelope(
        Dot(sender, draw(st.integers(1, 2**40))),
        draw(st.integers(0, 2**40)),
        deps,
        path,
        draw(st.binary(max_size=64)),
    )


@given(envelopes())
def test_envelope_roundtrip(env):
    assert MessageEnvelope.decode(env.encode()) == env


@pytest.mark.skipif(_codec is None, reason="compiled kernel not built")
@given(envelopes())
def test_backend_parity(env):
    fields = (
        env.sender.replica,
        env.sender.counter,
        env.lamport,
        [(d.replica, d.counter) for d in env.deps],
        env.path,
        env.payload,
    )
    encoded = _codec.encode_envelope(*fields)
    assert encoded == _codec_py.encode_envelope(*fields)
    assert _codec.decode_envelope(encoded) == _codec_py.decode_envelope(encoded)


def test_envelope_decode_errors():
    env = MessageEnvelope(Dot("a", 1), 1, (), ("c",), b"+1")
    data = env.encode()
    with pytest.raises(DecodeError):
        MessageEnvelope.decode(b"\x00" + data[1:])  # bad magic
    with pytest.raises(DecodeError):
        MessageEnvelope.decode(data[:-1])  # truncated
    with pytest.raises(DecodeError):
        MessageEnvelope.decode(data + b"\x00")  # trailing bytes


@given(
    st.recursive(
        st.none()
        | st.booleans()
        | st.integers(-(2**60), 2**60)
        | st.floats(allow_nan=False)
        | st.text(max_size=20)
        | st.binary(max_size=20),
        lambda children: st.lists(children, max_size=4),
        max_leaves=10,
    )
)
def test_value_codec_roundtrip(value):
    decoded = codec.decode_value(codec.encode_value(value))
    normalized = _as_lists(value)
    assert decoded == normalized


def _as_lists(value):
    if isinstance(value, tuple):
        return [_as_lists(v) for v in value]
    if isinstance(value, list):
        return [_as_lists(v) for v in value]
    return value


@given(st.integers(-(2**62), 2**62))
def test_zigzag_roundtrip(n):
    assert codec.unzigzag(codec.zigzag(n)) == n


def test_line_roundtrip():
    env = MessageEnvelope(
        Dot("ab-1", 4), 9, (Dot("zz", 2),), ("recipe", "ingrs", "a.3"), b"\x00\xff"
    )
    assert decode_line(encode_line(env)) == env


def test_batch_roundtrip_and_savings():
    envs = [
        MessageEnvelope(Dot("sender", i + 1), 10 + i, (Dot("b", 3),), ("notes",), b"x" * 5)
        for i in range(6)
    ]
    frame = encode_batch(envs)
    assert decode_batch(frame) == envs
    assert len(frame) < sum(len(e.encode()) for e in envs)


def test_batch_rejects_mixed_senders():
    envs = [
        MessageEnvelope(Dot("a", 1), 1, (), ("x",), b""),
        MessageEnvelope(Dot("b", 1), 1, (), ("x",), b""),
    ]
    with pytest.raises(ValueError):
        encode_batch(envs)
