"""Replica identifiers and per-operation dots."""

from __future__ import annotations

import random
from typing import NamedTuple

# 64-symbol alphabet; 10 symbols = 60 bits, collision-safe for desk-scale groups.
ID_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-"
ID_LENGTH = 10

# Reserved characters: "." separates replica and counter in child names,
# "\t"/"\n" delimit the textual envelope encoding, "\x00" is the path separator.
_FORBIDDEN = {".", "\t", "\n", "\x00"}


def new_replica_id(rng: random.Random | None = None) -> str:
    """Generate a fresh replica id, deterministically if ``rng`` is seeded."""
    rng = rng if rng is not None else random
    return "".join(rng.choice(ID_ALPHABET) for _ in range(ID_LENGTH))


def check_replica_id(replica_id: str) -> str:
    if not replica_id:
        raise ValueError("replica id must be non-empty")
    if any(ch in _FORBIDDEN for ch in replica_id):
        raise ValueError(f"replica id contains reserved character: {replica_id!r}")
    return replica_id


class Dot(NamedTuple):
    """Globally unique operation identifier: (replica id, per-replica counter)."""

    replica: str
    counter: int

    def name(self) -> str:
        """Render as a child name, e.g. ``"a.3"``."""
        return f"{self.replica}.{self.counter}"

    @staticmethod
    def parse(name: str) -> "Dot":
        replica, _, counter = name.rpartition(".")
        if not replica or not counter.isdigit():
            raise ValueError(f"not a dot-shaped name: {name!r}")
        return Dot(replica, int(counter))
