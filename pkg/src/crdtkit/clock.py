"""Vector clocks over dynamic replica sets."""

from __future__ import annotations

from .ids import Dot


class VectorClock:
    """Map replica id -> maximum contiguous delivered counter (absent = 0).

    Entries only grow. A dot (r, c) is *covered* once entries[r] >= c.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: dict[str, int] | None = None):
        self.entries: dict[str, int] = dict(entries) if entries else {}

    def get(self, replica: str) -> int:
        return self.entries.get(replica, 0)

    def covers(self, dot: Dot) -> bool:
        return self.entries.get(dot.replica, 0) >= dot.counter

    def advance(self, replica: str, counter: int) -> None:
        """Raise the entry for ``replica`` to ``counter`` (never lowers)."""
        if counter > self.entries.get(replica, 0):
            self.entries[replica] = counter

    def merge(self, other: "VectorClock") -> None:
        for replica, counter in other.entries.items():
            if counter > self.entries.get(replica, 0):
                self.entries[replica] = counter

    def copy(self) -> "VectorClock":
        return VectorClock(self.entries)

    def items_sorted(self) -> list[tuple[str, int]]:
        return sorted(self.entries.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorClock):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self) -> str:
        inner = ", ".join(f"{r}:{c}" for r, c in self.items_sorted())
        return f"VectorClock({{{inner}}})"
