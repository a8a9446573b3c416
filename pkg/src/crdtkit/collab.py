"""The component contract and the two base classes most components build on.

A Collab is a self-contained hybrid CRDT node in a replicated tree. Op side:
if every sent message reaches every replica exactly once in causal order,
replicas converge. State side: loading a saved state is observably equivalent
to receiving all updates that contributed to it, merged with local updates.

Messages travel up the tree gaining one name per level, and back down by
popping names (the runtime delivers ``path`` root-first). Local operations
are applied through the same receive path as remote ones, flagged
``is_local`` — there is no separate fast path, so a sender ends up in the
same state as any receiver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable

from .errors import ContractError, DecodeError, LoadError
from .saves import MergeContext, SaveNode

if TYPE_CHECKING:
    from .runtime import Runtime, UpdateMeta


@dataclass(frozen=True)
class Init:
    """Construction handle carrying a component's place in the tree."""

    runtime: "Runtime"
    parent: Any
    name: str


CollabFactory = Callable[[Init], "Collab"]


class Collab:
    """Abstract tree node. Subclass CPrimitive or CObject instead."""

    def __init__(self, init: Init):
        self._rt = init.runtime
        self._parent = init.parent
        self._name = init.name

    # -- op side ----------------------------------------------------------

    def _send_self(self, payload: bytes) -> None:
        """Broadcast an operation addressed to this component."""
        self._parent._send_from_child(self, [], payload)

    def _receive(
        self, path: tuple[str, ...], cursor: int, payload: bytes, meta: "UpdateMeta"
    ) -> None:
        if cursor == len(path):
            self._receive_self(payload, meta)
        else:
            self._receive_child(path, cursor, payload, meta)

    def _receive_self(self, payload: bytes, meta: "UpdateMeta") -> None:
        raise DecodeError(f"component {self._name!r} does not accept own payloads")

    def _receive_child(
        self, path: tuple[str, ...], cursor: int, payload: bytes, meta: "UpdateMeta"
    ) -> None:
        raise DecodeError(f"component {self._name!r} has no children (path {path!r})")

    # -- state side ---------------------------------------------------------

    def _save(self) -> SaveNode:
        return SaveNode(self._save_own(), {})

    def _load(self, node: SaveNode, ctx: MergeContext) -> None:
        self._load_own(node.own, ctx)

    def _save_own(self) -> bytes:
        return b""

    def _load_own(self, data: bytes, ctx: MergeContext) -> None:
        pass

    def _seal(self) -> None:
        pass

    def _observable(self) -> Any:
        """Application-visible value, free of dots, clocks, and positions."""
        return None


class CPrimitive(Collab):
    """Leaf base: sends opaque payloads and handles them on delivery."""

    def send_primitive(self, payload: bytes) -> None:
        self._send_self(payload)

    def _receive_self(self, payload: bytes, meta: "UpdateMeta") -> None:
        self.receive_primitive(payload, meta)

    def receive_primitive(self, payload: bytes, meta: "UpdateMeta") -> None:
        raise NotImplementedError


class CObject(Collab):
    """Composed base: routes messages among named children, no CRDT logic.

    Children are registered during construction and fixed afterwards; the
    registration order must be identical on every replica.
    """

    def __init__(self, init: Init):
        super().__init__(init)
        self._children: dict[str, Collab] = {}
        self._sealed = False

    def register_collab(self, name: str, factory: CollabFactory) -> Any:
        if self._sealed:
            raise ContractError("register_collab after construction completed")
        if not name or "\x00" in name:
            raise ValueError(f"invalid child name: {name!r}")
        if name in self._children:
            raise ContractError(f"duplicate child name: {name!r}")
        child = factory(Init(self._rt, self, name))
        child._seal()
        self._children[name] = child
        return child

    def _seal(self) -> None:
        self._sealed = True

    def _send_from_child(self, child: Collab, segments: list[str], payload: bytes):
        if self._children.get(child._name) is not child:
            raise ContractError(f"send from unregistered child {child._name!r}")
        segments.insert(0, child._name)
        return self._parent._send_from_child(self, segments, payload)

    def _receive_child(
        self, path: tuple[str, ...], cursor: int, payload: bytes, meta: "UpdateMeta"
    ) -> None:
        name = path[cursor]
        child = self._children.get(name)
        if child is None:
            raise DecodeError(f"unknown child {name!r} at {self._name!r}")
        child._receive(path, cursor + 1, payload, meta)

    def _save(self) -> SaveNode:
        return SaveNode(
            self._save_own(),
            {name: child._save() for name, child in self._children.items()},
        )

    def _load(self, node: SaveNode, ctx: MergeContext) -> None:
        unknown = set(node.children) - set(self._children)
        if unknown:
            raise LoadError(f"saved state names unknown children: {sorted(unknown)}")
        # Children registered locally but absent from the save keep local state.
        for name, child in self._children.items():
            if name in node.children:
                child._load(node.children[name], ctx)
        self._load_own(node.own, ctx)

    def _observable(self) -> Any:
        return {name: child._observable() for name, child in self._children.items()}
