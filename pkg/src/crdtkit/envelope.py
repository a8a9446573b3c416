"""Message envelopes and their wire encodings.

Binary layout: magic 0x43, version 0x01, then length-prefixed sender id,
sender counter (varint), lamport (varint), dep count plus (id, counter)
pairs, path segment count plus UTF-8 segments, payload length plus payload.

A line-delimited textual encoding (tab-separated fields, base64 payload)
serves the relay service and trace files. A batch frame packs consecutive
envelopes from one sender, sharing the header bytes.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass
from typing import Iterable

from . import codec
from .errors import DecodeError
from .ids import Dot

BATCH_MAGIC = 0x42
BATCH_VERSION = 0x01


@dataclass(frozen=True)
class MessageEnvelope:
    sender: Dot
    lamport: int
    deps: tuple[Dot, ...]
    path: tuple[str, ...]
    payload: bytes

    def encode(self) -> bytes:
        return codec.encode_envelope(
            self.sender.replica,
            self.sender.counter,
            self.lamport,
            [(d.replica, d.counter) for d in self.deps],
            self.path,
            self.payload,
        )

    @staticmethod
    def decode(data: bytes) -> "MessageEnvelope":
        try:
            sender, counter, lamport, deps, path, payload = codec.decode_envelope(data)
        except codec.CodecError as exc:
            raise DecodeError(str(exc)) from exc
        return MessageEnvelope(
            Dot(sender, counter),
            lamport,
            tuple(Dot(r, c) for r, c in deps),
            path,
            payload,
        )


def _b64(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.urlsafe_b64decode(text.encode("ascii"))


def encode_line(env: MessageEnvelope) -> str:
    """One-line textual form: sender, counter, lamport, deps, path, payload."""
    deps = ",".join(f"{d.replica}:{d.counter}" for d in env.deps) or "-"
    path = ",".join(_b64(seg.encode("utf-8")) for seg in env.path)
    return "\t".join(
        (
            env.sender.replica,
            str(env.sender.counter),
            str(env.lamport),
            deps,
            path,
            _b64(env.payload),
        )
    )


def decode_line(line: str) -> MessageEnvelope:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 6:
        raise DecodeError(f"expected 6 fields, got {len(parts)}")
    sender, counter, lamport, deps_field, path_field, payload_field = parts
    try:
        deps = ()
        if deps_field != "-":
            deps = tuple(
                Dot(item.rsplit(":", 1)[0], int(item.rsplit(":", 1)[1]))
                for item in deps_field.split(",")
            )
        path = tuple(
            _unb64(seg).decode("utf-8") for seg in path_field.split(",") if seg
        )
        return MessageEnvelope(
            Dot(sender, int(counter)), int(lamport), deps, path, _unb64(payload_field)
        )
    except (ValueError, IndexError) as exc:
        raise DecodeError(f"bad envelope line: {exc}") from exc


def encode_batch(envelopes: Iterable[MessageEnvelope]) -> bytes:
    """Pack consecutive same-sender envelopes, sharing header and sender id."""
    envs = list(envelopes)
    if not envs:
        raise ValueError("empty batch")
    first = envs[0]
    for i, env in enumerate(envs):
        if env.sender.replica != first.sender.replica:
            raise ValueError("batch must come from a single sender")
        if env.sender.counter != first.sender.counter + i:
            raise ValueError("batch counters must be consecutive")
    w = codec.Writer()
    w.byte(BATCH_MAGIC)
    w.byte(BATCH_VERSION)
    w.str(first.sender.replica)
    w.uint(first.sender.counter)
    w.uint(len(envs))
    w.uint(first.lamport)
    for env in envs:
        w.uint(env.lamport - first.lamport)
        w.uint(len(env.deps))
        for dep in env.deps:
            w.str(dep.replica)
            w.uint(dep.counter)
        w.uint(len(env.path))
        for seg in env.path:
            w.str(seg)
        w.bytes(env.payload)
    return w.getvalue()


def decode_batch(data: bytes) -> list[MessageEnvelope]:
    r = codec.Reader(data)
    try:
        if r.byte() != BATCH_MAGIC or r.byte() != BATCH_VERSION:
            raise DecodeError("bad batch header")
        sender = r.str()
        first_counter = r.uint()
        count = r.uint()
        base_lamport = r.uint()
        envs = []
        for i in range(count):
            lamport = base_lamport + r.uint()
            deps = tuple(Dot(r.str(), r.uint()) for _ in range(r.uint()))
            path = tuple(r.str() for _ in range(r.uint()))
            payload = r.bytes()
            envs.append(
                MessageEnvelope(Dot(sender, first_counter + i), lamport, deps, path, payload)
            )
        r.expect_done()
    except codec.CodecError as exc:
        raise DecodeError(str(exc)) from exc
    return envs
