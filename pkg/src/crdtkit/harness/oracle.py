"""Brute-force confluence oracle.

Builds a causal DAG of envelopes by driving real sender replicas, then
applies *every* linear extension of the causal order to a fresh replica and
collects the distinct final digests. A verdict passes when exactly one
digest appears, and that canonical state doubles as an expected value for
hand-written tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable

from ..envelope import MessageEnvelope
from ..ids import Dot
from ..runtime import Runtime

MAX_ORACLE_ENVELOPES = 7

Build = Callable[[Runtime], Any]
OpFn = Callable[[random.Random, Any], bool]


class HistoryBuilder:
    """Drives real replicas to produce envelopes with known causal structure."""

    def __init__(self, build: Build, replica_ids: tuple[str, ...] = ("a", "b", "c")):
        self.build = build
        self.handles: dict[str, Any] = {}
        self.runtimes: dict[str, Runtime] = {}
        self.envelopes: list[MessageEnvelope] = []
        for replica_id in replica_ids:
            runtime = Runtime(replica_id)
            self.handles[replica_id] = build(runtime)
            runtime.on_send.append(self.envelopes.append)
            self.runtimes[replica_id] = runtime

    def sync(self, replica_id: str, senders: tuple[str, ...] | None = None) -> None:
        """Feed existing envelopes (optionally from selected senders) to a replica.

        Non-causally-closed subsets simply leave some envelopes buffered,
        which models partial connectivity.
        """
        runtime = self.runtimes[replica_id]
        for env in list(self.envelopes):
            if env.sender.replica == replica_id:
                continue
            if senders is not None and env.sender.replica not in senders:
                continue
            runtime.receive(env)

    def do(self, replica_id: str, action: Callable[[Any], Any]) -> None:
        action(self.handles[replica_id])


def causal_closures(envelopes: list[MessageEnvelope]) -> dict[Dot, set[Dot]]:
    """Transitive causal past per envelope (including itself), derived
    independently from deps plus the implicit same-sender predecessor."""
    closures: dict[Dot, set[Dot]] = {}
    for env in envelopes:  # creation order is causal-compatible
        past: set[Dot] = {env.sender}
        replica, counter = env.sender
        if counter > 1:
            past |= closures[Dot(replica, counter - 1)]
        for dep in env.deps:
            past |= closures[dep]
        closures[env.sender] = past
    return closures


@dataclass
class OracleVerdict:
    digests: set[str]
    orders: int
    canonical: Any

    @property
    def passed(self) -> bool:
        return len(self.digests) == 1


def enumerate_orders(
    envelopes: list[MessageEnvelope],
    build: Build,
    max_orders: int | None = None,
) -> OracleVerdict:
    """Deliver every linear extension of the causal order to fresh replicas."""
    if len(envelopes) > MAX_ORACLE_ENVELOPES:
        raise ValueError(
            f"too many envelopes for exhaustive enumeration: {len(envelopes)}"
        )
    closures = causal_closures(envelopes)
    n = len(envelopes)
    preds: list[set[int]] = []
    index_of = {env.sender: i for i, env in enumerate(envelopes)}
    for i, env in enumerate(envelopes):
        preds.append({index_of[d] for d in closures[env.sender] if d != env.sender})

    digests: set[str] = set()
    orders = 0
    canonical: Any = None
    order: list[int] = []
    placed = [False] * n

    def run_order() -> None:
        nonlocal orders, canonical
        runtime = Runtime("oracle-replica")
        handles = build(runtime)
        for i in order:
            delivered = runtime.receive(envelopes[i])
            assert delivered, "linear extension was not immediately deliverable"
        orders += 1
        digest = runtime.digest()
        if canonical is None:
            canonical = runtime.observable()
        digests.add(digest)

    def backtrack() -> None:
        if max_orders is not None and orders >= max_orders:
            return
        if len(order) == n:
            run_order()
            return
        for i in range(n):
            if placed[i]:
                continue
            if any(not placed[j] for j in preds[i]):
                continue
            placed[i] = True
            order.append(i)
            backtrack()
            order.pop()
            placed[i] = False

    if n == 0:
        run_order()
    else:
        backtrack()
    return OracleVerdict(digests, orders, canonical)


def random_history(
    build: Build,
    op: OpFn,
    rng: random.Random,
    max_ops: int = 5,
    max_envelopes: int = MAX_ORACLE_ENVELOPES,
    replica_ids: tuple[str, ...] = ("a", "b", "c"),
) -> list[MessageEnvelope]:
    """Sample a small causal DAG of ops from one component's menu."""
    builder = HistoryBuilder(build, replica_ids)
    ops_done = 0
    guard = 0
    while ops_done < max_ops and len(builder.envelopes) < max_envelopes - 1:
        guard += 1
        if guard > 50:
            break
        replica_id = replica_ids[rng.randrange(len(replica_ids))]
        for other in replica_ids:
            if other != replica_id and rng.random() < 0.5:
                builder.sync(replica_id, (other,))
        before = len(builder.envelopes)
        if op(rng, builder.handles[replica_id]):
            ops_done += 1
            if len(builder.envelopes) > max_envelopes:
                # Overshot the enumeration budget; drop this history.
                del builder.envelopes[before:]
                return builder.envelopes[:before] if before else []
    return builder.envelopes
