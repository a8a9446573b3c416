"""Deterministic multi-replica network simulator over virtual time.

Given the same seed and the same sequence of send/run calls, the delivery
schedule is bit-identical across runs. Supports fixed or uniform latency,
duplicate delivery, lossy links with at-least-once redelivery, and scheduled
partitions (messages across a partition are held until it heals).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable

Deliver = Callable[[str, bytes], None]


@dataclass(frozen=True)
class Partition:
    """Between ``start`` and ``end``, replicas in different groups cannot talk."""

    start: float
    end: float
    groups: tuple[frozenset[str], ...]

    def separates(self, a: str, b: str, now: float) -> bool:
        if not self.start <= now < self.end:
            return False
        group_a = next((g for g in self.groups if a in g), None)
        group_b = next((g for g in self.groups if b in g), None)
        return group_a is not group_b or group_a is None


@dataclass
class NetStats:
    messages: int = 0
    deliveries: int = 0
    duplicates: int = 0
    bytes_sent: int = 0


class SimNetwork:
    def __init__(
        self,
        replicas: list[str],
        latency: tuple[float, float] = (0.0, 200.0),
        dup: float = 0.0,
        drop: float = 0.0,
        seed: int = 0,
        partitions: tuple[Partition, ...] = (),
        retry_gap: float = 50.0,
    ):
        self.replicas = list(replicas)
        self.latency = latency
        self.dup = dup
        self.drop = drop
        self.partitions = partitions
        self.retry_gap = retry_gap
        self.now = 0.0
        self.stats = NetStats()
        self._rng = random.Random(seed)
        self._queue: list[tuple[float, int, str, bytes]] = []
        self._seq = 0

    def _draw_latency(self) -> float:
        lo, hi = self.latency
        if hi <= lo:
            return lo
        return self._rng.uniform(lo, hi)

    def _push(self, at: float, dst: str, data: bytes) -> None:
        heapq.heappush(self._queue, (at, self._seq, dst, data))
        self._seq += 1

    def send(self, src: str, data: bytes) -> None:
        """Broadcast to every other replica."""
        self.stats.messages += 1
        for dst in self.replicas:
            if dst == src:
                continue
            self.stats.bytes_sent += len(data)
            base = self.now
            for partition in self.partitions:
                if partition.separates(src, dst, base):
                    base = max(base, partition.end)
            delay = self._draw_latency()
            # Lossy link: every attempt may drop; redelivery keeps trying.
            while self.drop > 0 and self._rng.random() < self.drop:
                delay += self.retry_gap + self._draw_latency()
            self._push(base + delay, dst, data)
            if self.dup > 0 and self._rng.random() < self.dup:
                self.stats.duplicates += 1
                self._push(base + self._draw_latency(), dst, data)

    def run_until(self, at: float, deliver: Deliver) -> None:
        while self._queue and self._queue[0][0] <= at:
            time, _, dst, data = heapq.heappop(self._queue)
            self.now = max(self.now, time)
            self.stats.deliveries += 1
            deliver(dst, data)
        self.now = max(self.now, at)

    def quiesce(self, deliver: Deliver) -> None:
        """Flush all in-flight traffic."""
        while self._queue:
            time, _, dst, data = heapq.heappop(self._queue)
            self.now = max(self.now, time)
            self.stats.deliveries += 1
            deliver(dst, data)

    def pending(self) -> int:
        return len(self._queue)
