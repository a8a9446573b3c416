"""Convergence fuzzing over the simulated network.

Drives N replicas with scripted random operations, optionally crossing over
saved states every K ops, then flushes all traffic and checks that every
replica's observable digest is identical. Exactly-once and causal-safety are
asserted externally on every delivery, from the harness's own accounting of
sent envelopes — not from runtime internals.

A mutation mode inverts the LWW tie-break on one replica; the fuzzer must
detect the divergence, which is the suite's self-test.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from ..envelope import MessageEnvelope
from ..ids import Dot
from ..runtime import Mode, Runtime
from ..saves import DocumentSave
from .network import Partition, SimNetwork
from .schema import Doc, apply_random_op, build_doc


@dataclass
class FuzzConfig:
    replicas: int = 4
    ops: int = 1000
    seed: int = 0
    dup: float = 0.0
    drop: float = 0.0
    latency: tuple[float, float] = (0.0, 200.0)
    merge_every: int = 0
    check_every: int = 0
    op_interval: float = 1.0
    mode: Mode = Mode.FULL
    mutate_replica: int | None = None
    weights: dict[str, float] | None = None
    partitions: tuple[Partition, ...] = ()


@dataclass
class FuzzReport:
    converged: bool
    ops_applied: int
    envelopes: int
    deliveries: int
    total_bytes: int
    mean_envelope_bytes: float
    max_deps: int
    digests: list[str]
    divergence_step: int | None
    violations: list[str]
    elapsed_s: float
    seed: int

    def canonical_lines(self) -> list[str]:
        """Deterministic report lines: same (seed, config) => same bytes."""
        lines = [
            f"fuzz seed={self.seed} ops={self.ops_applied} envelopes={self.envelopes}",
            f"deliveries={self.deliveries} bytes={self.total_bytes}"
            f" mean_env_bytes={self.mean_envelope_bytes:.2f} max_deps={self.max_deps}",
            f"converged={str(self.converged).lower()}"
            + (f" divergence_step={self.divergence_step}" if self.divergence_step else ""),
        ]
        lines += [f"violation {v}" for v in self.violations]
        lines += [f"digest {d}" for d in sorted(set(self.digests))]
        return lines


@dataclass
class _Accounting:
    """External oracle state: what was sent, and what each replica has seen."""

    deps_by_dot: dict[Dot, tuple[Dot, ...]] = field(default_factory=dict)
    delivered: dict[str, dict[str, int]] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)


def run_fuzz(config: FuzzConfig) -> FuzzReport:
    start = time.perf_counter()
    rng = random.Random(config.seed)
    ids = [f"r{i}" for i in range(config.replicas)]
    network = SimNetwork(
        ids,
        latency=config.latency,
        dup=config.dup,
        drop=config.drop,
        seed=config.seed + 1,
        partitions=config.partitions,
    )
    acct = _Accounting(delivered={rid: {} for rid in ids})
    docs: dict[str, Doc] = {}
    env_count = 0
    env_bytes = 0
    max_deps = 0

    for index, rid in enumerate(ids):
        runtime = Runtime(rid, mode=config.mode)
        if config.mutate_replica == index:
            runtime.mutate_lww_tiebreak = True
        docs[rid] = build_doc(runtime)

        def on_send(env: MessageEnvelope, _src: str = rid) -> None:
            nonlocal env_count, env_bytes, max_deps
            data = env.encode()
            acct.deps_by_dot[env.sender] = env.deps
            # The local echo counts as the sender's own delivery.
            acct.delivered[_src][env.sender.replica] = env.sender.counter
            env_count += 1
            env_bytes += len(data)
            max_deps = max(max_deps, len(env.deps))
            network.send(_src, data)

        runtime.on_send.append(on_send)

    def deliver(dst: str, data: bytes) -> None:
        env = MessageEnvelope.decode(data)
        deliveries = docs[dst].runtime.receive(env)
        _account_deliveries(acct, dst, deliveries, config.mode)

    def digests() -> list[str]:
        return [docs[rid].runtime.digest() for rid in ids]

    ops_applied = 0
    divergence_step = None
    for step in range(1, config.ops + 1):
        network.run_until(step * config.op_interval, deliver)
        rid = ids[rng.randrange(len(ids))]
        if apply_random_op(rng, docs[rid], config.weights) is not None:
            ops_applied += 1
        if config.merge_every and step % config.merge_every == 0:
            _crossover(rng, ids, docs, acct)
        if config.check_every and step % config.check_every == 0:
            network.quiesce(deliver)
            if len(set(digests())) > 1:
                divergence_step = step
                break
    network.quiesce(deliver)
    final = digests()
    converged = len(set(final)) == 1 and divergence_step is None
    return FuzzReport(
        converged=converged and not acct.violations,
        ops_applied=ops_applied,
        envelopes=env_count,
        deliveries=network.stats.deliveries,
        total_bytes=env_bytes,
        mean_envelope_bytes=(env_bytes / env_count) if env_count else 0.0,
        max_deps=max_deps,
        digests=final,
        divergence_step=divergence_step,
        violations=acct.violations,
        elapsed_s=time.perf_counter() - start,
        seed=config.seed,
    )


def _account_deliveries(acct, dst, deliveries, mode) -> None:
    clock = acct.delivered[dst]
    for delivery in deliveries:
        replica, counter = delivery.meta.sender
        seen = clock.get(replica, 0)
        if counter <= seen:
            acct.violations.append(
                f"exactly-once: {dst} re-delivered {replica}.{counter}"
            )
        elif mode is Mode.FULL and counter != seen + 1:
            acct.violations.append(
                f"causal-gap: {dst} delivered {replica}.{counter} after {seen}"
            )
        for dep in acct.deps_by_dot.get(Dot(replica, counter), ()):
            if clock.get(dep.replica, 0) < dep.counter:
                acct.violations.append(
                    f"causal-safety: {dst} delivered {replica}.{counter}"
                    f" before dep {dep.replica}.{dep.counter}"
                )
        clock[replica] = max(seen, counter)


def _crossover(rng, ids, docs, acct) -> None:
    """Exchange saved states between two replicas (state-based merge)."""
    first = ids[rng.randrange(len(ids))]
    second = ids[rng.randrange(len(ids))]
    while second == first:
        second = ids[rng.randrange(len(ids))]
    save_first = docs[first].runtime.save_bytes()
    save_second = docs[second].runtime.save_bytes()
    for dst, data in ((first, save_second), (second, save_first)):
        causal = DocumentSave.decode(data).causal
        drained = docs[dst].runtime.load_bytes(data)
        clock = acct.delivered[dst]
        for replica, counter in causal.entries.items():
            if counter > clock.get(replica, 0):
                clock[replica] = counter
        _account_deliveries(acct, dst, drained, docs[dst].runtime.mode)
