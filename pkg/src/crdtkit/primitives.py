"""Leaf CRDTs: last-writer-wins register and positive-negative counter."""

from __future__ import annotations

from typing import Any, Callable

from . import codec
from .collab import CPrimitive, Init
from .runtime import UpdateMeta
from .saves import MergeContext


class CVar(CPrimitive):
    """Last-writer-wins register.

    The value corresponds to the set op with the lexicographically greatest
    (lamport, writer id) tag; ties cannot occur because writer ids break them.
    """

    def __init__(
        self,
        init: Init,
        initial: Any = None,
        encode: Callable[[Any], bytes] | None = None,
        decode: Callable[[bytes], Any] | None = None,
    ):
        super().__init__(init)
        self._value = initial
        self._tag: tuple[int, str] = (0, "")
        self._encode = encode if encode is not None else codec.encode_value
        self._decode = decode if decode is not None else codec.decode_value

    def get(self) -> Any:
        return self._value

    def set(self, value: Any) -> None:
        self.send_primitive(self._encode(value))

    def receive_primitive(self, payload: bytes, meta: UpdateMeta) -> None:
        value = self._decode(payload)
        self._adopt((meta.lamport, meta.sender.replica), value)

    def _adopt(self, tag: tuple[int, str], value: Any) -> None:
        if self._wins(tag):
            self._tag = tag
            self._value = value

    def _wins(self, tag: tuple[int, str]) -> bool:
        if self._rt.mutate_lww_tiebreak and tag[0] == self._tag[0]:
            return tag[1] < self._tag[1]
        return tag > self._tag

    def _save_own(self) -> bytes:
        w = codec.Writer()
        w.uint(self._tag[0])
        w.str(self._tag[1])
        w.bytes(self._encode(self._value))
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        r = codec.Reader(data)
        tag = (r.uint(), r.str())
        value = self._decode(r.bytes())
        self._adopt(tag, value)

    def _observable(self) -> Any:
        return self._value


class CCounter(CPrimitive):
    """Counter supporting increments and decrements from any replica.

    Keeps per-replica totals of additions and subtractions; both grow
    monotonically under causal delivery, so the state-based merge is an
    entrywise max.
    """

    def __init__(self, init: Init):
        super().__init__(init)
        self._pos: dict[str, int] = {}
        self._neg: dict[str, int] = {}

    def value(self) -> int:
        return sum(self._pos.values()) - sum(self._neg.values())

    def add(self, amount: int) -> None:
        if amount == 0:
            raise ValueError("refusing to send a no-op increment")
        w = codec.Writer()
        w.sint(amount)
        self.send_primitive(w.getvalue())

    def receive_primitive(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        amount = r.sint()
        r.expect_done()
        replica = meta.sender.replica
        if amount > 0:
            self._pos[replica] = self._pos.get(replica, 0) + amount
        else:
            self._neg[replica] = self._neg.get(replica, 0) - amount

    def _save_own(self) -> bytes:
        w = codec.Writer()
        for totals in (self._pos, self._neg):
            w.uint(len(totals))
            for replica, total in sorted(totals.items()):
                w.str(replica)
                w.uint(total)
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        r = codec.Reader(data)
        for totals in (self._pos, self._neg):
            for _ in range(r.uint()):
                replica = r.str()
                total = r.uint()
                if total > totals.get(replica, 0):
                    totals[replica] = total

    def _observable(self) -> int:
        return self.value()
