"""Saved-state structures: recursive component trees plus the causal summary.

Layout: magic 0x44, version 0x01, causal map (sorted by replica id), lamport,
then the recursive tree. Each tree node is its component's own bytes followed
by named child nodes sorted by name. Encoding is canonical: identical state
yields identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import codec
from .clock import VectorClock
from .errors import DecodeError
from .ids import Dot

SAVE_MAGIC = 0x44
SAVE_VERSION = 0x01


@dataclass
class SaveNode:
    """One component's saved state: own bytes plus named child subtrees."""

    own: bytes = b""
    children: dict[str, "SaveNode"] = field(default_factory=dict)


@dataclass(frozen=True)
class MergeContext:
    """Clocks a component needs to classify remote content during a load.

    ``local`` is the loading replica's clock from before the merge; ``remote``
    is the saved state's clock. A dot covered by ``local`` was already
    incorporated here; one covered by ``remote`` was incorporated at the
    source.
    """

    local: VectorClock
    remote: VectorClock

    def seen_locally(self, dot: Dot) -> bool:
        return self.local.covers(dot)

    def seen_remotely(self, dot: Dot) -> bool:
        return self.remote.covers(dot)


@dataclass
class DocumentSave:
    causal: VectorClock
    lamport: int
    roots: dict[str, SaveNode]

    def encode(self) -> bytes:
        w = codec.Writer()
        w.byte(SAVE_MAGIC)
        w.byte(SAVE_VERSION)
        entries = self.causal.items_sorted()
        w.uint(len(entries))
        for replica, counter in entries:
            w.str(replica)
            w.uint(counter)
        w.uint(self.lamport)
        _write_node(w, SaveNode(b"", self.roots))
        return w.getvalue()

    @staticmethod
    def decode(data: bytes) -> "DocumentSave":
        r = codec.Reader(data)
        try:
            if r.byte() != SAVE_MAGIC or r.byte() != SAVE_VERSION:
                raise DecodeError("bad save header")
            entries = {}
            for _ in range(r.uint()):
                replica = r.str()
                entries[replica] = r.uint()
            lamport = r.uint()
            root = _read_node(r)
            r.expect_done()
        except codec.CodecError as exc:
            raise DecodeError(str(exc)) from exc
        return DocumentSave(VectorClock(entries), lamport, root.children)


def _write_node(w: codec.Writer, node: SaveNode) -> None:
    w.bytes(node.own)
    w.uint(len(node.children))
    for name in sorted(node.children):
        w.str(name)
        _write_node(w, node.children[name])


def _read_node(r: codec.Reader) -> SaveNode:
    own = r.bytes()
    children = {}
    for _ in range(r.uint()):
        name = r.str()
        children[name] = _read_node(r)
    return SaveNode(own, children)
