"""Desk-scale micro-benchmarks: trace replay and codec backend comparison.

``run_bench`` replays a typing trace into a text component across simulated
replicas, optionally batching each sender's envelopes into shared-header
frames flushed at most once per window, and reports throughput, wire bytes,
virtual end-to-end latency, and saved-state cost against the raw text size.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Any

from .. import _codec_py, codec
from ..envelope import MessageEnvelope, decode_batch, encode_batch
from ..ids import Dot
from ..runtime import Mode, Runtime
from ..textlist import CText
from .network import SimNetwork
from .traces import TraceEvent


@dataclass
class BenchReport:
    ops_applied: int
    envelopes: int
    frames: int
    total_bytes: int
    mean_envelope_bytes: float
    latency_p50_ms: float
    latency_p95_ms: float
    latency_max_ms: float
    save_bytes: int
    raw_text_bytes: int
    save_ratio: float
    save_wall_ms: float
    load_wall_ms: float
    wall_s: float
    converged: bool

    def lines(self) -> list[str]:
        return [
            f"ops={self.ops_applied} envelopes={self.envelopes} frames={self.frames}",
            f"wire_bytes={self.total_bytes} mean_envelope_bytes={self.mean_envelope_bytes:.1f}",
            f"virtual_latency_ms p50={self.latency_p50_ms:.1f}"
            f" p95={self.latency_p95_ms:.1f} max={self.latency_max_ms:.1f}",
            f"save_bytes={self.save_bytes} raw_text_bytes={self.raw_text_bytes}"
            f" ratio={self.save_ratio:.3f}",
            f"save_ms={self.save_wall_ms:.2f} load_ms={self.load_wall_ms:.2f}",
            f"converged={str(self.converged).lower()}",
        ]


@dataclass
class _Sender:
    runtime: Runtime
    text: CText
    buffer: list[MessageEnvelope] = field(default_factory=list)
    window_start: float = 0.0


def run_bench(
    events: list[TraceEvent],
    replicas: int = 1,
    batch_ms: float = 0.0,
    seed: int = 0,
    latency: tuple[float, float] = (0.0, 50.0),
    mode: Mode = Mode.FULL,
) -> BenchReport:
    start = time.perf_counter()
    ids = [f"r{i}" for i in range(replicas)]
    network = SimNetwork(ids, latency=latency, seed=seed)
    senders: dict[str, _Sender] = {}
    sent_at: dict[Dot, float] = {}
    latencies: list[float] = []
    stats = {"envelopes": 0, "frames": 0, "bytes": 0, "env_bytes": 0}

    for rid in ids:
        runtime = Runtime(rid, mode=mode)
        text = runtime.register("text", CText)
        sender = _Sender(runtime, text)
        senders[rid] = sender

        def on_send(env: MessageEnvelope, _sender: _Sender = sender, _rid: str = rid) -> None:
            stats["envelopes"] += 1
            stats["env_bytes"] += len(env.encode())
            sent_at[env.sender] = network.now
            if batch_ms > 0:
                if not _sender.buffer:
                    _sender.window_start = network.now
                _sender.buffer.append(env)
            else:
                data = env.encode()
                stats["bytes"] += len(data)
                stats["frames"] += 1
                network.send(_rid, data)

        runtime.on_send.append(on_send)

    def flush(rid: str) -> None:
        sender = senders[rid]
        if not sender.buffer:
            return
        data = encode_batch(sender.buffer)
        stats["bytes"] += len(data)
        stats["frames"] += 1
        network.send(rid, data)
        sender.buffer.clear()

    def deliver(dst: str, data: bytes) -> None:
        frames = decode_batch(data) if data and data[0] == 0x42 else [
            MessageEnvelope.decode(data)
        ]
        for env in frames:
            if senders[dst].runtime.receive(env):
                latencies.append(network.now - sent_at[env.sender])

    applied = 0
    for event in events:
        now = float(event.offset_ms)
        network.run_until(now, deliver)
        if batch_ms > 0:
            for rid in ids:
                sender = senders[rid]
                if sender.buffer and now - sender.window_start >= batch_ms:
                    flush(rid)
        rid = ids[applied % len(ids)]
        text = senders[rid].text
        if event.kind == "insert":
            index = min(event.index, len(text))
            if event.content:
                text.insert_text(index, event.content)
        else:
            if len(text) == 0:
                continue
            text.delete(min(event.index, len(text) - 1))
        applied += 1
    for rid in ids:
        flush(rid)
    network.quiesce(deliver)

    first = senders[ids[0]]
    converged = len({s.runtime.digest() for s in senders.values()}) == 1
    raw = len(first.text.as_string().encode("utf-8"))
    t0 = time.perf_counter()
    save = first.runtime.save_bytes()
    save_ms = (time.perf_counter() - t0) * 1000
    fresh = Runtime("loader", mode=mode)
    fresh.register("text", CText)
    t0 = time.perf_counter()
    fresh.load_bytes(save)
    load_ms = (time.perf_counter() - t0) * 1000
    converged = converged and fresh.digest() == first.runtime.digest()

    def pct(p: float) -> float:
        if not latencies:
            return 0.0
        ordered = sorted(latencies)
        return ordered[min(len(ordered) - 1, int(p * len(ordered)))]

    return BenchReport(
        ops_applied=applied,
        envelopes=stats["envelopes"],
        frames=stats["frames"],
        total_bytes=stats["bytes"],
        mean_envelope_bytes=(stats["env_bytes"] / stats["envelopes"]) if stats["envelopes"] else 0.0,
        latency_p50_ms=pct(0.50),
        latency_p95_ms=pct(0.95),
        latency_max_ms=max(latencies) if latencies else 0.0,
        save_bytes=len(save),
        raw_text_bytes=raw,
        save_ratio=(len(save) / raw) if raw else 0.0,
        save_wall_ms=save_ms,
        load_wall_ms=load_ms,
        wall_s=time.perf_counter() - start,
        converged=converged,
    )


def counter_increment_envelope() -> bytes:
    """The wire bytes of a single counter increment from a fresh replica."""
    from ..primitives import CCounter

    runtime = Runtime(None)
    counter = runtime.register("counter", CCounter)
    captured: list[MessageEnvelope] = []
    runtime.on_send.append(captured.append)
    counter.add(1)
    return captured[0].encode()


def codec_bench(n: int = 20000) -> dict[str, Any]:
    """Compare the compiled codec kernel against the pure-Python fallback."""
    envelope = MessageEnvelope(
        Dot("benchmark-replica", 12345),
        99999,
        (Dot("other-replica-1", 777), Dot("other-replica-2", 31)),
        ("recipe", "ingrs", "a.12", "text"),
        b"\x01\x0a some payload bytes \xff",
    )
    fields = (
        envelope.sender.replica,
        envelope.sender.counter,
        envelope.lamport,
        [(d.replica, d.counter) for d in envelope.deps],
        envelope.path,
        envelope.payload,
    )
    backends: dict[str, Any] = {"python": _codec_py}
    try:
        from .. import _codec

        backends["compiled"] = _codec
    except ImportError:
        pass
    results: dict[str, Any] = {"iterations": n, "active": codec.BACKEND}
    for name, module in backends.items():
        encoded = module.encode_envelope(*fields)
        t0 = time.perf_counter()
        for _ in range(n):
            module.encode_envelope(*fields)
        encode_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        for _ in range(n):
            module.decode_envelope(encoded)
        decode_s = time.perf_counter() - t0
        results[name] = {
            "encode_ops_per_s": n / encode_s if encode_s else float("inf"),
            "decode_ops_per_s": n / decode_s if decode_s else float("inf"),
        }
    if "compiled" in results:
        results["encode_speedup"] = (
            results["compiled"]["encode_ops_per_s"] / results["python"]["encode_ops_per_s"]
        )
        results["decode_speedup"] = (
            results["compiled"]["decode_ops_per_s"] / results["python"]["decode_ops_per_s"]
        )
    return results
