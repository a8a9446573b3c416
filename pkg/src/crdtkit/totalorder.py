"""A replicated dense total order on immutable positions.

Positions live in a tree. A run of positions created consecutively by one
replica shares a single *waypoint* and is addressed as (waypoint, offset),
which keeps metadata for bulk or sequential insertions tiny. Each waypoint
remembers the position it attached under, its side, and the creator's
sequence number of its first member (``base``); member ``offset`` of a
waypoint has sequence number ``base + offset``, unique per creator.

Placement of a new position after ``prev``:

* if nothing currently follows ``prev`` inside its own subtree (no run
  continuation and no right-side child waypoints), the new position becomes
  a right child of ``prev`` — extending ``prev``'s run in place when the
  creator and sequence numbers line up;
* otherwise it becomes a left child of ``prev``'s immediate successor in the
  full order (the leftmost descendant of its right subtree), which has no
  left children yet.

Either way the new position lands strictly between ``prev`` and everything
previously after it, so the order is dense even across deleted positions.
Same-slot siblings (only possible via concurrent insertions) are ordered by
ascending (sequence number, creator id), identically on every replica.

Order comparisons use per-waypoint *chains*: one coordinate per tree edge at
waypoint granularity. A coordinate locates a child waypoint within its
parent's run — before the parent member, just after it, or after the whole
remaining run, depending on how its key compares to the run continuation —
so position sort keys are plain tuples and runs of any length compare in
O(waypoint depth).
"""

from __future__ import annotations

from bisect import bisect_right, insort
from typing import Any, Iterator, NamedTuple

from . import codec
from .collab import CPrimitive, Init
from .errors import DecodeError, LoadError
from .ids import Dot
from .runtime import UpdateMeta
from .saves import MergeContext

LEFT = 0
RIGHT = 1

_AFTER_RUN = float("inf")


class Position(NamedTuple):
    """Reference to one member of a waypoint run."""

    creator: str
    waypoint: int
    offset: int


START = Position("", 0, 0)
END = Position("", 0, 1)


class WaypointRecord(NamedTuple):
    """Serialized form of a waypoint, as stored in saves."""

    creator: str
    counter: int
    base: int
    parent: Position
    side: int
    count: int
    seg_ends: tuple[int, ...]
    seg_ctrs: tuple[int, ...]


class _Waypoint:
    __slots__ = (
        "creator",
        "counter",
        "base",
        "parent",
        "side",
        "count",
        "chain",
        "seg_ends",
        "seg_ctrs",
        "left_kids",
        "right_kids",
        "values",
    )

    def __init__(
        self,
        creator: str,
        counter: int,
        base: int,
        parent: tuple["_Waypoint", int] | None,
        side: int,
        count: int,
        chain: tuple,
    ):
        self.creator = creator
        self.counter = counter
        self.base = base
        self.parent = parent
        self.side = side
        self.count = count
        self.chain = chain
        # Per extension op: offsets [prev end, end) were created by dot counter ctr.
        self.seg_ends: list[int] = []
        self.seg_ctrs: list[int] = []
        # offset -> list of child waypoints, kept sorted by (base, creator)
        self.left_kids: dict[int, list[_Waypoint]] = {}
        self.right_kids: dict[int, list[_Waypoint]] = {}
        # offset -> value for embedders that attach values to positions
        self.values: dict[int, Any] = {}

    def key(self) -> tuple[int, str]:
        return (self.base, self.creator)


def _attach_coord(
    parent: _Waypoint, offset: int, side: int, key: tuple[int, str]
) -> tuple:
    """Coordinate of a child waypoint inside its parent's run.

    Stable under later run extensions: a right child is classified against
    the run continuation's key whether or not that member exists yet.
    """
    if side == LEFT:
        return (offset, -1, key)
    if key < (parent.base + offset + 1, parent.creator):
        return (offset, 1, key)
    return (_AFTER_RUN, -offset, key)


class PositionTree:
    """The shared tree structure; embedders drive it via plan/apply calls."""

    def __init__(self) -> None:
        root = _Waypoint("", 0, 0, None, RIGHT, 1, ())
        root.seg_ends = [1]
        root.seg_ctrs = [0]
        self._wps: dict[tuple[str, int], _Waypoint] = {("", 0): root}
        self.root = root

    # -- lookups -------------------------------------------------------------

    def resolve(self, ref: Position) -> tuple[_Waypoint, int]:
        wp = self._wps.get((ref.creator, ref.waypoint))
        if wp is None or not 0 <= ref.offset < wp.count:
            raise ValueError(f"unknown position {ref!r}")
        return wp, ref.offset

    def ref(self, wp: _Waypoint, offset: int) -> Position:
        return Position(wp.creator, wp.counter, offset)

    def sortkey(self, ref: Position) -> tuple:
        wp, offset = self.resolve(ref)
        return wp.chain + ((offset, 0),)

    def creation_dot(self, wp: _Waypoint, offset: int) -> Dot:
        index = bisect_right(wp.seg_ends, offset)
        return Dot(wp.creator, wp.seg_ctrs[index])

    def waypoints(self) -> Iterator[_Waypoint]:
        """All waypoints except the root sentinel, sorted by identity."""
        for key in sorted(self._wps):
            if key != ("", 0):
                yield self._wps[key]

    def position_count(self) -> int:
        return sum(wp.count for wp in self.waypoints())

    def traversal(self) -> list[Position]:
        """All positions in order (excluding the sentinel). Test/debug helper."""
        refs = [
            self.ref(wp, offset)
            for wp in self.waypoints()
            for offset in range(wp.count)
        ]
        refs.sort(key=self.sortkey)
        return refs

    # -- placement -------------------------------------------------------------

    def plan_insert(
        self, prev: Position, creator: str, next_number: int
    ) -> tuple[str, Any, Any]:
        """Decide where a new position created after ``prev`` goes.

        Returns ("extend", waypoint, None) when the creator can grow an
        existing run in place, else ("new", parent position, side).
        """
        wp, offset = self.resolve(prev)
        has_run_next = offset < wp.count - 1
        right_kids = wp.right_kids.get(offset)
        if not has_run_next and not right_kids:
            if (
                wp.creator == creator
                and wp.parent is not None
                and next_number == wp.base + wp.count
            ):
                return ("extend", wp, None)
            return ("new", self.ref(wp, offset), RIGHT)
        node_wp, node_offset = self._first_right_child(wp, offset)
        while True:
            left_kids = node_wp.left_kids.get(node_offset)
            if not left_kids:
                break
            node_wp, node_offset = left_kids[0], 0
        return ("new", self.ref(node_wp, node_offset), LEFT)

    def _first_right_child(self, wp: _Waypoint, offset: int) -> tuple[_Waypoint, int]:
        run_next = (wp.base + offset + 1, wp.creator) if offset < wp.count - 1 else None
        right_kids = wp.right_kids.get(offset)
        first_kid = right_kids[0] if right_kids else None
        if run_next is not None and (first_kid is None or run_next < first_kid.key()):
            return wp, offset + 1
        assert first_kid is not None
        return first_kid, 0

    # -- structural updates ------------------------------------------------------

    def apply_new(
        self,
        creator: str,
        counter: int,
        base: int,
        parent_ref: Position,
        side: int,
        count: int,
        dot_counter: int,
    ) -> _Waypoint:
        key = (creator, counter)
        if key in self._wps:
            raise DecodeError(f"waypoint {key} created twice")
        parent_wp, parent_offset = self.resolve(parent_ref)
        chain = parent_wp.chain + (
            _attach_coord(parent_wp, parent_offset, side, (base, creator)),
        )
        wp = _Waypoint(creator, counter, base, (parent_wp, parent_offset), side, count, chain)
        wp.seg_ends = [count]
        wp.seg_ctrs = [dot_counter]
        kids = parent_wp.left_kids if side == LEFT else parent_wp.right_kids
        insort(kids.setdefault(parent_offset, []), wp, key=_Waypoint.key)
        self._wps[key] = wp
        return wp

    def apply_extend(
        self, creator: str, counter: int, added: int, dot_counter: int
    ) -> tuple[_Waypoint, int]:
        wp = self._wps.get((creator, counter))
        if wp is None:
            raise DecodeError(f"extension of unknown waypoint ({creator}, {counter})")
        first_new = wp.count
        wp.count += added
        wp.seg_ends.append(wp.count)
        wp.seg_ctrs.append(dot_counter)
        return wp, first_new

    # -- state-based merge -------------------------------------------------------

    def record(self, wp: _Waypoint) -> WaypointRecord:
        parent_wp, parent_offset = wp.parent  # never called on the root
        return WaypointRecord(
            wp.creator,
            wp.counter,
            wp.base,
            self.ref(parent_wp, parent_offset),
            wp.side,
            wp.count,
            tuple(wp.seg_ends),
            tuple(wp.seg_ctrs),
        )

    def merge_records(self, records: list[WaypointRecord]) -> None:
        """Union of waypoints; shared waypoints keep the longer run."""
        pending = list(records)
        while pending:
            remaining = []
            progress = False
            for rec in pending:
                wp = self._wps.get((rec.creator, rec.counter))
                if wp is not None:
                    if rec.count > wp.count:
                        wp.count = rec.count
                        wp.seg_ends = list(rec.seg_ends)
                        wp.seg_ctrs = list(rec.seg_ctrs)
                    progress = True
                    continue
                parent_wp = self._wps.get((rec.parent.creator, rec.parent.waypoint))
                if parent_wp is None or rec.parent.offset >= parent_wp.count:
                    remaining.append(rec)
                    continue
                wp = self.apply_new(
                    rec.creator,
                    rec.counter,
                    rec.base,
                    rec.parent,
                    rec.side,
                    rec.count,
                    rec.seg_ctrs[0],
                )
                wp.seg_ends = list(rec.seg_ends)
                wp.seg_ctrs = list(rec.seg_ctrs)
                progress = True
            if remaining and not progress:
                raise LoadError("saved order references unknown parent positions")
            pending = remaining


def write_position(w: codec.Writer, ref: Position) -> None:
    w.str(ref.creator)
    w.uint(ref.waypoint)
    w.uint(ref.offset)


def read_position(r: codec.Reader) -> Position:
    return Position(r.str(), r.uint(), r.uint())


def write_record(w: codec.Writer, rec: WaypointRecord) -> None:
    w.str(rec.creator)
    w.uint(rec.counter)
    w.uint(rec.base)
    write_position(w, rec.parent)
    w.byte(rec.side)
    w.uint(rec.count)
    _write_segments(w, rec.seg_ends, rec.seg_ctrs)


def read_record(r: codec.Reader) -> WaypointRecord:
    creator = r.str()
    counter = r.uint()
    base = r.uint()
    parent = read_position(r)
    side = r.byte()
    count = r.uint()
    seg_ends, seg_ctrs = _read_segments(r)
    return WaypointRecord(creator, counter, base, parent, side, count, seg_ends, seg_ctrs)


def _write_segments(
    w: codec.Writer, ends: tuple[int, ...] | list[int], ctrs: tuple[int, ...] | list[int]
) -> None:
    """Delta+run-length encoding; a long single-key typing run costs a few bytes."""
    w.uint(len(ends))
    w.uint(ends[0])
    w.uint(ctrs[0])
    groups: list[list[int]] = []  # [repeat, dend, dctr]
    for i in range(1, len(ends)):
        dend = ends[i] - ends[i - 1]
        dctr = ctrs[i] - ctrs[i - 1]
        if groups and groups[-1][1] == dend and groups[-1][2] == dctr:
            groups[-1][0] += 1
        else:
            groups.append([1, dend, dctr])
    w.uint(len(groups))
    for repeat, dend, dctr in groups:
        w.uint(repeat)
        w.uint(dend)
        w.uint(dctr)


def _read_segments(r: codec.Reader) -> tuple[tuple[int, ...], tuple[int, ...]]:
    count = r.uint()
    end = r.uint()
    ctr = r.uint()
    ends = [end]
    ctrs = [ctr]
    for _ in range(r.uint()):
        repeat = r.uint()
        dend = r.uint()
        dctr = r.uint()
        for _ in range(repeat):
            end += dend
            ctr += dctr
            ends.append(end)
            ctrs.append(ctr)
    if len(ends) != count:
        raise DecodeError("segment table length mismatch")
    return tuple(ends), tuple(ctrs)


_OP_NEW = 1
_OP_EXTEND = 2


class CTotalOrder(CPrimitive):
    """The dense total order as a standalone component.

    Value collections register one of these and point their elements at its
    positions. Its observable is the traversal itself: replicas holding the
    same waypoint set agree on the full order.
    """

    def __init__(self, init: Init):
        super().__init__(init)
        self.tree = PositionTree()
        self._posctr = 0
        self._wpctr = 0
        self._last_created: Position | None = None

    def create_position(self, prev: Position, next: Position) -> Position:
        """Create and broadcast a fresh position p with prev < p < next."""
        if self.compare(prev, next) >= 0:
            raise ValueError("prev must sort before next")
        if next != END:
            self.tree.resolve(next)
        plan, target, side = self.tree.plan_insert(
            prev, self._rt.replica_id, self._posctr + 1
        )
        w = codec.Writer()
        if plan == "extend":
            w.byte(_OP_EXTEND)
            w.uint(target.counter)
            w.uint(1)
        else:
            w.byte(_OP_NEW)
            w.uint(self._wpctr + 1)
            w.uint(self._posctr + 1)
            write_position(w, target)
            w.byte(side)
            w.uint(1)
        self.send_primitive(w.getvalue())
        created = self._last_created
        assert created is not None
        return created

    def compare(self, a: Position, b: Position) -> int:
        """-1, 0, or 1; deterministic and identical across replicas."""
        if a != END:
            self.tree.resolve(a)
        if b != END:
            self.tree.resolve(b)
        if a == b:
            return 0
        if a == END:
            return 1
        if b == END:
            return -1
        ka = self.tree.sortkey(a)
        kb = self.tree.sortkey(b)
        return -1 if ka < kb else (1 if ka > kb else 0)

    def receive_primitive(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        tag = r.byte()
        sender = meta.sender.replica
        if tag == _OP_NEW:
            counter = r.uint()
            base = r.uint()
            parent = read_position(r)
            side = r.byte()
            count = r.uint()
            r.expect_done()
            wp = self.tree.apply_new(
                sender, counter, base, parent, side, count, meta.sender.counter
            )
            first = 0
        elif tag == _OP_EXTEND:
            counter = r.uint()
            count = r.uint()
            r.expect_done()
            wp, first = self.tree.apply_extend(
                sender, counter, count, meta.sender.counter
            )
        else:
            raise DecodeError(f"unknown order op tag {tag}")
        if sender == self._rt.replica_id:
            self._bump_counters(wp)
            self._last_created = self.tree.ref(wp, first)

    def _bump_counters(self, wp: _Waypoint) -> None:
        if wp.counter > self._wpctr:
            self._wpctr = wp.counter
        last_number = wp.base + wp.count - 1
        if last_number > self._posctr:
            self._posctr = last_number

    def _save_own(self) -> bytes:
        w = codec.Writer()
        wps = list(self.tree.waypoints())
        w.uint(len(wps))
        for wp in wps:
            write_record(w, self.tree.record(wp))
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        if not data:
            return
        r = codec.Reader(data)
        records = [read_record(r) for _ in range(r.uint())]
        r.expect_done()
        self.tree.merge_records(records)
        me = self._rt.replica_id
        for wp in self.tree.waypoints():
            if wp.creator == me:
                self._bump_counters(wp)

    def _observable(self) -> Any:
        return [list(ref) for ref in self.tree.traversal()]
