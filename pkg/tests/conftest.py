"""Shared test helpers: a manually-pumped mesh of connected replicas."""

from __future__ import annotations

from typing import Any, Callable

from crdtkit import Mode, Runtime


class Mesh:
    """N replicas with explicit, selective envelope exchange.

    Every envelope a replica sends is appended to its log; ``pump(src, dst)``
    delivers the part of ``src``'s log that ``dst`` has not seen yet, and
    ``sync()`` pumps everything everywhere until quiescent.
    """

    def __init__(
        self,
        ids: tuple[str, ...],
        build: Callable[[Runtime], Any],
        mode: Mode = Mode.FULL,
    ):
        self.ids = list(ids)
        self.runtimes: dict[str, Runtime] = {}
        self.handles: dict[str, Any] = {}
        self.log: dict[str, list] = {rid: [] for rid in ids}
        self._cursor: dict[tuple[str, str], int] = {}
        for rid in ids:
            runtime = Runtime(rid, mode=mode)
            self.handles[rid] = build(runtime)
            runtime.on_send.append(self.log[rid].append)
            self.runtimes[rid] = runtime

    def pump(self, src: str, dst: str) -> int:
        """Deliver src's unseen envelopes to dst; returns how many."""
        sent = self.log[src]
        i = self._cursor.get((src, dst), 0)
        count = 0
        while i < len(sent):
            self.runtimes[dst].receive(sent[i].encode())
            i += 1
            count += 1
        self._cursor[(src, dst)] = i
        return count

    def sync(self) -> None:
        moved = True
        while moved:
            moved = False
            for src in self.ids:
                for dst in self.ids:
                    if src != dst and self.pump(src, dst):
                        moved = True

    def digests(self) -> set[str]:
        return {rt.digest() for rt in self.runtimes.values()}

    def converged(self) -> bool:
        return len(self.digests()) == 1


def mesh2(build) -> Mesh:
    return Mesh(("a", "b"), build)


def mesh3(build) -> Mesh:
    return Mesh(("a", "b", "c"), build)
