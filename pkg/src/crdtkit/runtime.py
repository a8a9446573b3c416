"""The document runtime: identity, causal delivery, and whole-document saves.

One runtime owns one replica of one document. It assigns metadata to locally
sent operations, enforces exactly-once causal-order delivery of incoming
envelopes (buffering early arrivals, dropping duplicates), and orchestrates
save/load as a state-based merge.

Dependency metadata is compressed to the causally-maximal antichain: an
envelope lists, for each other replica, its latest delivered dot, minus any
dot already in the causal past of another listed dot. The sender's own
previous dot is an implicit dependency and never listed, so single-writer
streams carry no dependencies at all. In ``Mode.NOVC`` dependencies are
omitted entirely and arrival order per sender is trusted to be causal;
duplicate suppression still applies.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, NamedTuple

from .clock import VectorClock
from .collab import Collab, CollabFactory, Init
from .digest import digest_hex
from .envelope import MessageEnvelope
from .errors import ContractError, DecodeError, LoadError
from .ids import Dot, check_replica_id, new_replica_id
from .saves import DocumentSave, MergeContext, SaveNode


class Mode(Enum):
    """Causal-tracking mode: FULL enforces dependencies, NOVC trusts the transport."""

    FULL = "full"
    NOVC = "novc"


@dataclass(frozen=True)
class UpdateMeta:
    """Per-delivered-message metadata handed to components."""

    sender: Dot
    lamport: int
    is_local: bool
    past: dict[str, int] = field(repr=False)

    def in_causal_past(self, dot: Dot) -> bool:
        """Was ``dot`` delivered before this message *and* causally prior to it?"""
        return self.past.get(dot.replica, 0) >= dot.counter


class Delivery(NamedTuple):
    path: tuple[str, ...]
    payload: bytes
    meta: UpdateMeta


class _Root:
    """Parent handle for root-level components."""

    __slots__ = ("runtime",)

    def __init__(self, runtime: "Runtime"):
        self.runtime = runtime

    def _send_from_child(self, child: Collab, segments: list[str], payload: bytes):
        segments.insert(0, child._name)
        return self.runtime._send_local(tuple(segments), payload)


class Runtime:
    """A document replica. All calls must come from one logical thread."""

    def __init__(
        self,
        replica_id: str | None = None,
        mode: Mode = Mode.FULL,
        rng: random.Random | None = None,
    ):
        self.replica_id = check_replica_id(
            replica_id if replica_id is not None else new_replica_id(rng)
        )
        self.mode = mode
        self.vc = VectorClock()
        self.lamport = 0
        self.on_send: list[Callable[[MessageEnvelope], None]] = []
        # Fault injection used by the fuzzer's mutation self-test.
        self.mutate_lww_tiebreak = False
        self._root = _Root(self)
        self._roots: dict[str, Collab] = {}
        self._delivering = False
        # Per delivered dot: its causal past as a clock, including itself.
        # Kept in memory only; dots merged in via saved states fall back to a
        # self-prefix under-approximation (sound for dependency pruning).
        self._closures: dict[Dot, dict[str, int]] = {}
        self._parked: dict[Dot, list[MessageEnvelope]] = {}
        self._parked_dots: set[Dot] = set()

    # -- component tree -----------------------------------------------------

    def register(self, name: str, factory: CollabFactory) -> Any:
        """Register a root component. Must mirror every other replica."""
        if not name or "\x00" in name:
            raise ValueError(f"invalid root name: {name!r}")
        if name in self._roots:
            raise ContractError(f"duplicate root name: {name!r}")
        collab = factory(Init(self, self._root, name))
        collab._seal()
        self._roots[name] = collab
        return collab

    # -- op side: sending -----------------------------------------------------

    def _send_local(self, path: tuple[str, ...], payload: bytes) -> MessageEnvelope:
        if self._delivering:
            raise ContractError("cannot send while a message is being delivered")
        counter = self.vc.get(self.replica_id) + 1
        self.lamport += 1
        deps = self._maximal_deps() if self.mode is Mode.FULL else ()
        env = MessageEnvelope(
            Dot(self.replica_id, counter), self.lamport, deps, path, payload
        )
        self._apply(env, is_local=True)
        for callback in self.on_send:
            callback(env)
        return env

    def _maximal_deps(self) -> tuple[Dot, ...]:
        candidates = [
            Dot(replica, counter)
            for replica, counter in self.vc.entries.items()
            if replica != self.replica_id and counter > 0
        ]
        if len(candidates) <= 1:
            return tuple(candidates)
        deps = []
        for dot in candidates:
            covered = False
            for other in candidates:
                if other is dot:
                    continue
                closure = self._closures.get(other)
                if closure is not None and closure.get(dot.replica, 0) >= dot.counter:
                    covered = True
                    break
            if not covered:
                deps.append(dot)
        return tuple(deps)

    # -- op side: receiving ---------------------------------------------------

    def receive(self, message: bytes | MessageEnvelope) -> list[Delivery]:
        """Deliver an incoming envelope, plus anything it unblocks, in order.

        Duplicates and premature arrivals are absorbed silently; malformed
        bytes raise :class:`DecodeError`.
        """
        env = (
            MessageEnvelope.decode(bytes(message))
            if isinstance(message, (bytes, bytearray))
            else message
        )
        self._check_envelope(env)
        sender = env.sender
        if self.vc.covers(sender) or sender in self._parked_dots:
            return []
        if self.mode is Mode.NOVC:
            return [self._apply(env, is_local=False)]
        needs = self._unmet(env)
        if needs:
            self._park(env, needs[0])
            return []
        delivered = [self._apply(env, is_local=False)]
        self._drain_from(sender, delivered)
        return delivered

    @staticmethod
    def _check_envelope(env: MessageEnvelope) -> None:
        seen = set()
        for dep in env.deps:
            if dep.replica == env.sender.replica:
                raise DecodeError("envelope lists a dependency on its own sender")
            if dep.replica in seen:
                raise DecodeError("envelope lists two dependencies from one replica")
            seen.add(dep.replica)
        if not env.path:
            raise DecodeError("envelope has an empty path")

    def _unmet(self, env: MessageEnvelope) -> list[Dot]:
        needs = []
        replica, counter = env.sender
        if self.vc.get(replica) + 1 < counter:
            needs.append(Dot(replica, counter - 1))
        for dep in env.deps:
            if not self.vc.covers(dep):
                needs.append(dep)
        return needs

    def _park(self, env: MessageEnvelope, need: Dot) -> None:
        self._parked.setdefault(need, []).append(env)
        self._parked_dots.add(env.sender)

    def _drain_from(self, dot: Dot, delivered: list[Delivery]) -> None:
        queue = [dot]
        while queue:
            for env in self._parked.pop(queue.pop(), []):
                self._parked_dots.discard(env.sender)
                if self.vc.covers(env.sender):
                    continue
                needs = self._unmet(env)
                if needs:
                    self._park(env, needs[0])
                    continue
                delivered.append(self._apply(env, is_local=False))
                queue.append(env.sender)

    def _drain_all(self) -> list[Delivery]:
        delivered: list[Delivery] = []
        progress = True
        while progress:
            progress = False
            for need in [n for n in self._parked if self.vc.covers(n)]:
                progress = True
                self._drain_from(need, delivered)
        return delivered

    def _apply(self, env: MessageEnvelope, is_local: bool) -> Delivery:
        replica, counter = env.sender
        if self.mode is Mode.FULL:
            past: dict[str, int] = {}
            if counter > 1:
                _merge_clock(past, self._closure_of(Dot(replica, counter - 1)))
            for dep in env.deps:
                _merge_clock(past, self._closure_of(dep))
        else:
            past = dict(self.vc.entries)
        self.vc.advance(replica, counter)
        if env.lamport > self.lamport:
            self.lamport = env.lamport
        if self.mode is Mode.FULL:
            closure = dict(past)
            closure[replica] = counter
            self._closures[env.sender] = closure
        meta = UpdateMeta(env.sender, env.lamport, is_local, past)
        root = self._roots.get(env.path[0])
        if root is None:
            raise DecodeError(f"unknown root component {env.path[0]!r}")
        self._delivering = True
        try:
            root._receive(env.path, 1, env.payload, meta)
        finally:
            self._delivering = False
        return Delivery(env.path, env.payload, meta)

    def _closure_of(self, dot: Dot) -> dict[str, int]:
        closure = self._closures.get(dot)
        return closure if closure is not None else {dot.replica: dot.counter}

    # -- state side -----------------------------------------------------------

    def save_bytes(self) -> bytes:
        """Serialize the whole document. Deterministic for a given state."""
        if self._delivering:
            raise ContractError("cannot save while a message is being delivered")
        roots = {name: collab._save() for name, collab in self._roots.items()}
        return DocumentSave(self.vc.copy(), self.lamport, roots).encode()

    def load_bytes(self, data: bytes) -> list[Delivery]:
        """Merge a saved state; equivalent to delivering all of its operations,
        skipping duplicates. Returns any buffered envelopes this unblocked."""
        if self._delivering:
            raise ContractError("cannot load while a message is being delivered")
        save = DocumentSave.decode(data)
        unknown = set(save.roots) - set(self._roots)
        if unknown:
            raise LoadError(f"saved state names unknown roots: {sorted(unknown)}")
        ctx = MergeContext(local=self.vc.copy(), remote=save.causal)
        self.vc.merge(save.causal)
        if save.lamport > self.lamport:
            self.lamport = save.lamport
        self._delivering = True
        try:
            for name, collab in self._roots.items():
                node = save.roots.get(name)
                if node is not None:
                    collab._load(node, ctx)
        finally:
            self._delivering = False
        return self._drain_all()

    # -- observation ------------------------------------------------------------

    def observable(self) -> dict[str, Any]:
        return {name: c._observable() for name, c in sorted(self._roots.items())}

    def digest(self) -> str:
        """Hash of the observable state; equal states yield equal digests."""
        return digest_hex(self.observable())

    def pending_count(self) -> int:
        return len(self._parked_dots)


def _merge_clock(target: dict[str, int], other: dict[str, int]) -> None:
    for replica, counter in other.items():
        if counter > target.get(replica, 0):
            target[replica] = counter
