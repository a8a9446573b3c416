"""Dynamic composition: replicated sets of components and the movable list.

A CSet creates and permanently deletes child components. Children are keyed
by their create op's dot, so every replica derives the same name. Deletion
is by removal, not tombstone: a routed op or merged subtree for an absent
child whose creation dot is covered by the local clock is *proof* of
deletion and is ignored; an uncovered dot means corruption and is an error.

A CList composes a CSet of (value, position register) entries with a dense
total order. Moves set the entry's position register to a fresh position, so
the entry keeps its identity and concurrent edits to its value survive.
Archiving hides an entry reversibly and is update-wins: the archive op
carries the per-replica counters of entry ops its sender had seen, and any
entry op outside that summary cancels the archive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterator

from . import codec
from .collab import Collab, CObject, Init
from .digest import canonical_bytes
from .errors import ContractError, DecodeError
from .ids import Dot
from .locallist import LocalList
from .primitives import CVar
from .runtime import UpdateMeta
from .saves import MergeContext, SaveNode
from .totalorder import END, START, CTotalOrder, Position

_OP_CREATE = 1
_OP_DELETE = 2

SetFactory = Callable[[Init, bytes], Collab]


class CSet(Collab):
    """Replicated set of dynamically created child components.

    The factory is registered at construction and runs on every replica when
    a create op arrives; creation args are retained so merges can construct
    children this replica has never seen.
    """

    def __init__(self, init: Init, factory: SetFactory):
        super().__init__(init)
        self._factory = factory
        self._children: dict[str, Collab] = {}
        self._creation_args: dict[str, bytes] = {}
        self._last_created: Collab | None = None
        self.on_change: Callable[[str, str], None] | None = None

    # -- public API ---------------------------------------------------------

    def add(self, args: bytes = b"") -> Any:
        w = codec.Writer()
        w.byte(_OP_CREATE)
        w.bytes(args)
        self._send_self(w.getvalue())
        created = self._last_created
        assert created is not None
        return created

    def delete(self, child: Collab) -> None:
        if self._children.get(child._name) is not child:
            return  # already gone; deleting an absent child is a local no-op
        w = codec.Writer()
        w.byte(_OP_DELETE)
        w.str(child._name)
        self._send_self(w.getvalue())

    def has(self, child: Collab) -> bool:
        return self._children.get(child._name) is child

    def values(self) -> Iterator[Collab]:
        return iter(self._children.values())

    def names(self) -> Iterator[str]:
        return iter(self._children)

    def by_name(self, name: str) -> Collab | None:
        return self._children.get(name)

    def __len__(self) -> int:
        return len(self._children)

    # -- op side ---------------------------------------------------------------

    def _receive_self(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        tag = r.byte()
        if tag == _OP_CREATE:
            args = r.bytes()
            r.expect_done()
            name = meta.sender.name()
            child = self._construct(name, args)
            if meta.is_local:
                self._last_created = child
            if self.on_change is not None:
                self.on_change("create", name)
        elif tag == _OP_DELETE:
            name = r.str()
            r.expect_done()
            self._children.pop(name, None)
            self._creation_args.pop(name, None)
            if self.on_change is not None:
                self.on_change("delete", name)
        else:
            raise DecodeError(f"unknown set op tag {tag}")

    def _receive_child(
        self, path: tuple[str, ...], cursor: int, payload: bytes, meta: UpdateMeta
    ) -> None:
        name = path[cursor]
        child = self._children.get(name)
        if child is None:
            dot = Dot.parse(name)
            if self._rt.vc.covers(dot):
                return  # child provably deleted; the delete wins over this op
            raise DecodeError(f"op for unknown child {name!r} of {self._name!r}")
        child._receive(path, cursor + 1, payload, meta)

    def _send_from_child(self, child: Collab, segments: list[str], payload: bytes):
        if self._children.get(child._name) is not child:
            raise ContractError(f"send from deleted child {child._name!r}")
        segments.insert(0, child._name)
        return self._parent._send_from_child(self, segments, payload)

    def _construct(self, name: str, args: bytes) -> Collab:
        child = self._factory(Init(self._rt, self, name), args)
        child._seal()
        self._children[name] = child
        self._creation_args[name] = args
        return child

    # -- state side ----------------------------------------------------------------

    def _save(self) -> SaveNode:
        w = codec.Writer()
        w.uint(len(self._creation_args))
        for name in sorted(self._creation_args):
            w.str(name)
            w.bytes(self._creation_args[name])
        children = {name: child._save() for name, child in self._children.items()}
        return SaveNode(w.getvalue(), children)

    def _load(self, node: SaveNode, ctx: MergeContext) -> None:
        r = codec.Reader(node.own)
        remote_args = {}
        for _ in range(r.uint()):
            name = r.str()
            remote_args[name] = r.bytes()
        r.expect_done()
        for name in sorted(node.children):
            subtree = node.children[name]
            child = self._children.get(name)
            if child is not None:
                child._load(subtree, ctx)
                continue
            dot = Dot.parse(name)
            if ctx.seen_locally(dot):
                continue  # we saw its creation and it is gone: we deleted it
            child = self._construct(name, remote_args[name])
            child._load(subtree, ctx)
        for name in list(self._children):
            if name not in node.children and ctx.seen_remotely(Dot.parse(name)):
                del self._children[name]
                del self._creation_args[name]

    def _observable(self) -> Any:
        states = [child._observable() for child in self._children.values()]
        states.sort(key=canonical_bytes)
        return states


@dataclass
class ArchiveRecord:
    """One archive op: who archived, what they had seen, and whether an
    unseen entry op has since canceled it."""

    dot: Dot
    observed: dict[str, int]
    canceled: bool


def _encode_position_value(pos: Position | None) -> bytes:
    return codec.encode_value(None if pos is None else list(pos))


def _decode_position_value(data: bytes) -> Position | None:
    raw = codec.decode_value(data)
    return None if raw is None else Position(raw[0], raw[1], raw[2])


class CListEntry(CObject):
    """Pair of (element component, current-position register)."""

    def __init__(self, init: Init, factory: SetFactory, args: bytes):
        super().__init__(init)
        r = codec.Reader(args)
        pos_raw = r.bytes()
        user_args = r.bytes()
        r.expect_done()
        initial_pos = _decode_position_value(pos_raw)
        self.value = self.register_collab("val", lambda i: factory(i, user_args))
        self.position = self.register_collab(
            "pos",
            lambda i: CVar(
                i,
                initial=initial_pos,
                encode=_encode_position_value,
                decode=_decode_position_value,
            ),
        )

    def _observable(self) -> Any:
        return self.value._observable()


_OP_ARCHIVE = 1


class CList(CObject):
    """List with move, delete-wins removal, and update-wins archiving."""

    def __init__(self, init: Init, factory: SetFactory):
        super().__init__(init)
        self._order: CTotalOrder = self.register_collab("order", CTotalOrder)
        self._set: CSet = self.register_collab(
            "set", lambda i: CSet(i, lambda ci, args: CListEntry(ci, factory, args))
        )
        self._set.on_change = self._on_set_change
        # Per entry: per-replica max counter of ops delivered into its subtree.
        self._entry_ops: dict[str, dict[str, int]] = {}
        self._records: dict[str, list[ArchiveRecord]] = {}
        self._view = LocalList()  # key: (position sort key, name), item: name
        self._view_keys: dict[str, tuple] = {}

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._view)

    def get(self, index: int) -> Any:
        """The element component at a visible index."""
        return self._entry_at(index).value

    def values(self) -> Iterator[Any]:
        for name in self._view:
            yield self._entry(name).value

    def hidden_values(self) -> Iterator[Any]:
        """Elements present in the set but not visible (archived or unplaced)."""
        for name in sorted(self._set.names()):
            if name not in self._view_keys:
                yield self._entry(name).value

    def index_of(self, value: Collab) -> int | None:
        entry = self._entry_of(value)
        key = self._view_keys.get(entry._name)
        return self._view.index_of(key) if key is not None else None

    def is_visible(self, value: Collab) -> bool:
        return self._entry_of(value)._name in self._view_keys

    def is_present(self, value: Collab) -> bool:
        """Present in the set (possibly archived), i.e. not deleted."""
        entry = self._entry_of(value)
        return self._set.by_name(entry._name) is entry

    # -- local operations --------------------------------------------------------

    def insert(self, index: int, args: bytes = b"") -> Any:
        if not 0 <= index <= len(self._view):
            raise IndexError(f"insert index {index} out of range")
        pos = self._create_position_at(index)
        w = codec.Writer()
        w.bytes(_encode_position_value(pos))
        w.bytes(args)
        entry: CListEntry = self._set.add(w.getvalue())
        return entry.value

    def delete(self, index: int) -> None:
        """Remove permanently; the delete wins over concurrent entry ops."""
        self._set.delete(self._entry_at(index))

    def move(self, start_index: int, insertion_index: int) -> None:
        """Reposition an entry; its identity and concurrent edits survive."""
        entry = self._entry_at(start_index)
        if not 0 <= insertion_index <= len(self._view):
            raise IndexError(f"insertion index {insertion_index} out of range")
        pos = self._create_position_at(insertion_index)
        entry.position.set(pos)

    def archive(self, index: int) -> None:
        """Hide an entry, unless someone has concurrently operated on it."""
        entry = self._entry_at(index)
        observed = self._entry_ops.get(entry._name, {})
        w = codec.Writer()
        w.byte(_OP_ARCHIVE)
        w.str(entry._name)
        w.uint(len(observed))
        for replica, counter in sorted(observed.items()):
            w.str(replica)
            w.uint(counter)
        self._send_self(w.getvalue())

    def restore(self, value: Collab) -> None:
        """Un-archive: give the entry a fresh position near its old one."""
        entry = self._entry_of(value)
        if self._set.by_name(entry._name) is not entry:
            raise ContractError("cannot restore a deleted entry")
        old = entry.position.get()
        if old is not None:
            fresh = self._order.create_position(old, END)
        else:
            last = len(self._view)
            fresh = self._create_position_at(last)
        entry.position.set(fresh)

    # -- internals ------------------------------------------------------------------

    def _entry(self, name: str) -> CListEntry:
        entry = self._set.by_name(name)
        assert entry is not None
        return entry  # type: ignore[return-value]

    def _entry_at(self, index: int) -> CListEntry:
        return self._entry(self._view.at(index))

    def _entry_of(self, value: Collab) -> CListEntry:
        entry = value._parent
        if not isinstance(entry, CListEntry) or entry._parent is not self._set:
            raise ValueError("value does not belong to this list")
        return entry

    def _create_position_at(self, index: int) -> Position:
        prev = START
        if index > 0:
            prev_entry = self._entry_at(index - 1)
            prev = prev_entry.position.get()
        nxt = END
        if index < len(self._view):
            nxt = self._entry_at(index).position.get()
        return self._order.create_position(prev, nxt)

    def _on_set_change(self, kind: str, name: str) -> None:
        if kind == "delete":
            self._entry_ops.pop(name, None)
            self._records.pop(name, None)
        self._refresh(name)

    def _refresh(self, name: str) -> None:
        entry = self._set.by_name(name)
        visible = False
        if entry is not None:
            pos = entry.position.get()  # type: ignore[union-attr]
            records = self._records.get(name, ())
            visible = pos is not None and all(rec.canceled for rec in records)
        old_key = self._view_keys.get(name)
        if visible:
            key = (self._order.tree.sortkey(pos), name)
            if key == old_key:
                return
            if old_key is not None:
                self._view.discard(old_key)
            self._view.add(key, name)
            self._view_keys[name] = key
        elif old_key is not None:
            self._view.discard(old_key)
            del self._view_keys[name]

    # -- op side ----------------------------------------------------------------------

    def _receive_self(self, payload: bytes, meta: UpdateMeta) -> None:
        r = codec.Reader(payload)
        tag = r.byte()
        if tag != _OP_ARCHIVE:
            raise DecodeError(f"unknown list op tag {tag}")
        name = r.str()
        observed = {}
        for _ in range(r.uint()):
            replica = r.str()
            observed[replica] = r.uint()
        r.expect_done()
        if self._set.by_name(name) is None:
            return  # deleted concurrently; delete wins over the archive
        seen = self._entry_ops.get(name, {})
        canceled = any(
            counter > observed.get(replica, 0) for replica, counter in seen.items()
        )
        self._records.setdefault(name, []).append(
            ArchiveRecord(meta.sender, observed, canceled)
        )
        self._refresh(name)

    def _receive_child(
        self, path: tuple[str, ...], cursor: int, payload: bytes, meta: UpdateMeta
    ) -> None:
        super()._receive_child(path, cursor, payload, meta)
        if path[cursor] != "set" or len(path) < cursor + 3:
            return
        # An op landed inside an entry's subtree (value edit or position set):
        # count it, cancel any archive that did not see it, update the view.
        name = path[cursor + 1]
        if self._set.by_name(name) is None:
            return  # the op was ignored because the entry is deleted
        replica, counter = meta.sender
        ops = self._entry_ops.setdefault(name, {})
        if counter > ops.get(replica, 0):
            ops[replica] = counter
        for rec in self._records.get(name, ()):
            if not rec.canceled and counter > rec.observed.get(replica, 0):
                rec.canceled = True
        self._refresh(name)

    # -- state side --------------------------------------------------------------------

    def _save_own(self) -> bytes:
        w = codec.Writer()
        names = sorted(set(self._entry_ops) | set(self._records))
        w.uint(len(names))
        for name in names:
            w.str(name)
            ops = self._entry_ops.get(name, {})
            w.uint(len(ops))
            for replica, counter in sorted(ops.items()):
                w.str(replica)
                w.uint(counter)
            records = self._records.get(name, [])
            w.uint(len(records))
            for rec in sorted(records, key=lambda rec: rec.dot):
                w.str(rec.dot.replica)
                w.uint(rec.dot.counter)
                w.uint(len(rec.observed))
                for replica, counter in sorted(rec.observed.items()):
                    w.str(replica)
                    w.uint(counter)
                w.byte(1 if rec.canceled else 0)
        return w.getvalue()

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        if data:
            r = codec.Reader(data)
            for _ in range(r.uint()):
                name = r.str()
                remote_ops = {}
                for _ in range(r.uint()):
                    replica = r.str()
                    remote_ops[replica] = r.uint()
                remote_records = []
                for _ in range(r.uint()):
                    dot = Dot(r.str(), r.uint())
                    observed = {}
                    for _ in range(r.uint()):
                        replica = r.str()
                        observed[replica] = r.uint()
                    canceled = r.byte() == 1
                    remote_records.append(ArchiveRecord(dot, observed, canceled))
                if self._set.by_name(name) is None:
                    continue  # deleted here (or everywhere); state dropped
                ops = self._entry_ops.setdefault(name, {})
                for replica, counter in remote_ops.items():
                    if counter > ops.get(replica, 0):
                        ops[replica] = counter
                local_records = self._records.setdefault(name, [])
                by_dot = {rec.dot: rec for rec in local_records}
                for remote in remote_records:
                    mine = by_dot.get(remote.dot)
                    if mine is None:
                        local_records.append(remote)
                        by_dot[remote.dot] = remote
                    elif remote.canceled:
                        mine.canceled = True
            r.expect_done()
        # Entries may have appeared, disappeared, or gained ops: re-evaluate.
        for name in list(self._entry_ops):
            if self._set.by_name(name) is None:
                del self._entry_ops[name]
        for name in list(self._records):
            if self._set.by_name(name) is None:
                del self._records[name]
                continue
            ops = self._entry_ops.get(name, {})
            for rec in self._records[name]:
                if not rec.canceled and any(
                    counter > rec.observed.get(replica, 0)
                    for replica, counter in ops.items()
                ):
                    rec.canceled = True
        self._rebuild_view()

    def _rebuild_view(self) -> None:
        self._view.clear()
        self._view_keys.clear()
        for name in self._set.names():
            self._refresh(name)

    def _observable(self) -> Any:
        return [self._entry(name)._observable() for name in self._view]
