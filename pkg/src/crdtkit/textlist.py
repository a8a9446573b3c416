"""List CRDTs for plain values and text.

Each element owns an immutable position in an embedded dense total order;
one local insertion broadcasts the position placement and the values in a
single op. Deletion removes values permanently — the position skeleton is
retained for ordering, but no per-element tombstone values are kept.

The state-based merge unions position nodes, then classifies values by
clock coverage: a value present on one side and absent on the other was
*deleted* if the absent side's clock covers the value's creation dot, and
*unseen* otherwise.
"""

from __future__ import annotations

from typing import Any, Iterator, Sequence

from . import codec
from .collab import CPrimitive, Init
from .errors import DecodeError
from .locallist import LocalList
from .runtime import UpdateMeta
from .saves import MergeContext
from .totalorder import (
    END,
    START,
    Position,
    PositionTree,
    _Waypoint,
    read_position,
    read_record,
    write_position,
    write_record,
)

_OP_NEW = 1
_OP_EXTEND = 2
_OP_DELETE = 3


class CValueList(CPrimitive):
    """Ordered list of immutable values with replicated insert/delete."""

    def __init__(self, init: Init):
        super().__init__(init)
        self._tree = PositionTree()
        self._posctr = 0
        self._wpctr = 0
        self._view = LocalList()  # key: position sort key, item: (waypoint, offset)

    # -- value encoding (overridden by CText) ---------------------------------

    def _encode_values(self, w: codec.Writer, values: Sequence[Any]) -> None:
        for value in values:
            codec.write_value(w, value)

    def _decode_values(self, r: codec.Reader, count: int) -> list[Any]:
        return [codec.read_value(r) for _ in range(count)]

    # -- queries ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._view)

    def get(self, index: int) -> Any:
        wp, offset = self._view.at(index)
        return wp.values[offset]

    def values(self) -> Iterator[Any]:
        for wp, offset in self._view:
            yield wp.values[offset]

    def position_at(self, index: int) -> Position:
        wp, offset = self._view.at(index)
        return self._tree.ref(wp, offset)

    def index_of_position(self, ref: Position) -> int | None:
        """Index of a present position, or None if absent (e.g. deleted)."""
        wp, offset = self._tree.resolve(ref)
        if offset not in wp.values:
            return None
        return self._view.index_of(wp.chain + ((offset, 0),))

    # -- local operations ----------------------------------------------------------

    def insert(self, index: int, values: Sequence[Any]) -> None:
        if not 0 <= index <= len(self._view):
            raise IndexError(f"insert index {index} out of range")
        if len(values) == 0:
            raise ValueError("nothing to insert")
        prev = self.position_at(index - 1) if index > 0 else START
        plan, target, side = self._tree.plan_insert(
            prev, self._rt.replica_id, self._posctr + 1
        )
        w = codec.Writer()
        if plan == "extend":
            w.byte(_OP_EXTEND)
            w.uint(target.counter)
        else:
            w.byte(_OP_NEW)
            w.uint(self._wpctr + 1)
            w.uint(self._posctr + 1)
            write_position(w, target)
            w.byte(side)
        w.uint(len(values))
        self._encode_values(w, values)
        self.send_primitive(w.getvalue())

    def delete(self, index: int, count: int = 1) -> None:
        if count < 1:
            raise ValueError("delete count must be positive")
        if not 0 <= index or index + count > len(self._view):
            raise IndexError(f"delete range [{index}, {index + count}) out of range")
        # Group the doomed positions into per-waypoint contiguous runs.
        ranges: list[list[Any]] = []  # [waypoint, start offset, length]
        for i in range(index, index + count):
            wp, offset = self._view.at(i)
            if ranges and ranges[-1][0] is wp and ranges[-1][1] + ranges[-1][2] == offset:
                ranges[-1][2] += 1
            else:
                ranges.append([wp, offset, 1])
        w = codec.Writer()
        w.byte(_OP_DELETE)
        w.uint(len(ranges))
        for wp, start, length in ranges:
            write_position(w, self._tree.ref(wp, start))
            w.uint(length)
        self.send_primitive(w.getvalue())

    # -- delivery ---------------------------------------------------------------

    def receive_primitive(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        tag = r.byte()
        sender = meta.sender.replica
        if tag in (_OP_NEW, _OP_EXTEND):
            if tag == _OP_NEW:
                counter = r.uint()
                base = r.uint()
                parent = read_position(r)
                side = r.byte()
                count = r.uint()
                values = self._decode_values(r, count)
                r.expect_done()
                wp = self._tree.apply_new(
                    sender, counter, base, parent, side, count, meta.sender.counter
                )
                first = 0
            else:
                counter = r.uint()
                count = r.uint()
                values = self._decode_values(r, count)
                r.expect_done()
                wp, first = self._tree.apply_extend(
                    sender, counter, count, meta.sender.counter
                )
            for i, value in enumerate(values):
                offset = first + i
                wp.values[offset] = value
                self._view.add(wp.chain + ((offset, 0),), (wp, offset))
            if sender == self._rt.replica_id:
                self._bump_counters(wp)
        elif tag == _OP_DELETE:
            ranges = []
            for _ in range(r.uint()):
                ref = read_position(r)
                length = r.uint()
                ranges.append((ref, length))
            r.expect_done()
            for ref, length in ranges:
                wp, start = self._tree.resolve(ref)
                for offset in range(start, start + length):
                    self._remove_value(wp, offset)
        else:
            raise DecodeError(f"unknown list op tag {tag}")

    def _remove_value(self, wp: _Waypoint, offset: int) -> None:
        # Concurrent deletes of the same position land here twice; the second
        # finds the value already gone and must do nothing.
        if offset in wp.values:
            del wp.values[offset]
            self._view.discard(wp.chain + ((offset, 0),))

    def _bump_counters(self, wp: _Waypoint) -> None:
        if wp.counter > self._wpctr:
            self._wpctr = wp.counter
        last_number = wp.base + wp.count - 1
        if last_number > self._posctr:
            self._posctr = last_number

    # -- state side ----------------------------------------------------------------

    def _save_own(self) -> bytes:
        w = codec.Writer()
        wps = list(self._tree.waypoints())
        w.uint(len(wps))
        for wp in wps:
            write_record(w, self._tree.record(wp))
            runs = _present_runs(wp)
            w.uint(len(runs))
            for start, length in runs:
                w.uint(start)
                w.uint(length)
                self._encode_values(w, [wp.values[off] for off in range(start, start + length)])
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        if not data:
            return
        r = codec.Reader(data)
        records = []
        presence: list[tuple[str, int, int, list[Any]]] = []
        for _ in range(r.uint()):
            rec = read_record(r)
            records.append(rec)
            for _ in range(r.uint()):
                start = r.uint()
                length = r.uint()
                values = self._decode_values(r, length)
                presence.append((rec.creator, rec.counter, start, values))
        r.expect_done()
        self._tree.merge_records(records)
        me = self._rt.replica_id
        for wp in self._tree.waypoints():
            if wp.creator == me:
                self._bump_counters(wp)
        remote_present: set[tuple[str, int, int]] = set()
        for creator, counter, start, values in presence:
            wp = self._tree._wps[(creator, counter)]
            for i, value in enumerate(values):
                offset = start + i
                remote_present.add((creator, counter, offset))
                if offset not in wp.values:
                    dot = self._tree.creation_dot(wp, offset)
                    if not ctx.seen_locally(dot):
                        wp.values[offset] = value
        for wp in self._tree.waypoints():
            for offset in list(wp.values):
                if (wp.creator, wp.counter, offset) in remote_present:
                    continue
                if ctx.seen_remotely(self._tree.creation_dot(wp, offset)):
                    del wp.values[offset]
        self._rebuild_view()

    def _rebuild_view(self) -> None:
        self._view.clear()
        entries = [
            (wp.chain + ((offset, 0),), (wp, offset))
            for wp in self._tree.waypoints()
            for offset in wp.values
        ]
        entries.sort(key=lambda pair: pair[0])
        self._view._keys = [key for key, _ in entries]
        self._view._items = [item for _, item in entries]

    def _observable(self) -> Any:
        return list(self.values())


def _present_runs(wp: _Waypoint) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    for offset in sorted(wp.values):
        if runs and runs[-1][0] + runs[-1][1] == offset:
            runs[-1] = (runs[-1][0], runs[-1][1] + 1)
        else:
            runs.append((offset, 1))
    return runs


class CText(CValueList):
    """Plain collaborative text: a value list of single characters."""

    def _encode_values(self, w: codec.Writer, values: Sequence[Any]) -> None:
        w.str("".join(values))

    def _decode_values(self, r: codec.Reader, count: int) -> list[Any]:
        text = r.str()
        if len(text) != count:
            raise DecodeError("text op length mismatch")
        return list(text)

    def insert_text(self, index: int, chars: str) -> None:
        self.insert(index, chars)

    def as_string(self) -> str:
        return "".join(self.values())

    def _observable(self) -> Any:
        return self.as_string()
