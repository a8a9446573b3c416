"""Command-line harness: fuzz, scenario, bench, relay, save/load."""

from __future__ import annotations

import argparse
import asyncio
import json
import random
import sys
import time

from ..runtime import Mode, Runtime
from .bench import codec_bench, counter_increment_envelope, run_bench
from .fuzz import FuzzConfig, run_fuzz
from .relay import RelayClient, serve_forever
from .scenarios import SCENARIOS, run_scenario
from .schema import apply_random_op, build_doc
from .traces import convert_triples, read_trace, synthetic_typing_trace, write_trace


def _parse_latency(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return (float(lo), float(hi or lo))


def _cmd_fuzz(args: argparse.Namespace) -> int:
    config = FuzzConfig(
        replicas=args.replicas,
        ops=args.ops,
        seed=args.seed,
        dup=args.dup,
        drop=args.drop,
        latency=_parse_latency(args.latency),
        merge_every=args.merge_every,
        check_every=args.check_every,
        mode=Mode.NOVC if args.novc else Mode.FULL,
        mutate_replica=0 if args.mutate else None,
    )
    report = run_fuzz(config)
    for line in report.canonical_lines():
        print(line)
    print(f"elapsed_s={report.elapsed_s:.2f}", file=sys.stderr)
    if args.mutate:
        # Self-test mode: success means the divergence was detected.
        return 0 if not report.converged else 1
    return 0 if report.converged else 1


def _cmd_scenario(args: argparse.Namespace) -> int:
    names = sorted(SCENARIOS) if args.name == "all" else [args.name]
    failed = 0
    for name in names:
        result = run_scenario(name)
        print(f"scenario {result.name}: {'PASS' if result.passed else 'FAIL'}")
        for line in result.lines:
            print(f"  {line}")
        failed += 0 if result.passed else 1
    return 0 if failed == 0 else 1


def _cmd_bench(args: argparse.Namespace) -> int:
    events = read_trace(args.trace)
    report = run_bench(
        events,
        replicas=args.replicas,
        batch_ms=args.batch_ms,
        seed=args.seed,
        latency=_parse_latency(args.latency),
    )
    print(f"counter_increment_envelope_bytes={len(counter_increment_envelope())}")
    for line in report.lines():
        print(line)
    print(f"wall_s={report.wall_s:.2f}", file=sys.stderr)
    return 0 if report.converged else 1


def _cmd_bench_codec(args: argparse.Namespace) -> int:
    results = codec_bench(args.iterations)
    print(f"active_backend={results['active']} iterations={results['iterations']}")
    for name in ("python", "compiled"):
        if name in results:
            print(
                f"{name}: encode={results[name]['encode_ops_per_s']:,.0f}/s"
                f" decode={results[name]['decode_ops_per_s']:,.0f}/s"
            )
    if "encode_speedup" in results:
        print(
            f"speedup: encode={results['encode_speedup']:.1f}x"
            f" decode={results['decode_speedup']:.1f}x"
        )
    return 0


def _cmd_gen_trace(args: argparse.Namespace) -> int:
    events = synthetic_typing_trace(args.chars, seed=args.seed, sequential=not args.random_pos)
    write_trace(args.out, events)
    print(f"wrote {len(events)} events to {args.out}")
    return 0


def _cmd_convert_trace(args: argparse.Namespace) -> int:
    count = convert_triples(args.infile, args.out)
    print(f"wrote {count} events to {args.out}")
    return 0


def _scripted_doc(seed: int, ops: int):
    runtime = Runtime(f"script-{seed}")
    doc = build_doc(runtime)
    rng = random.Random(seed)
    for _ in range(ops):
        apply_random_op(rng, doc)
    return runtime, doc


def _cmd_save(args: argparse.Namespace) -> int:
    runtime, _ = _scripted_doc(args.seed, args.ops)
    data = runtime.save_bytes()
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(f"saved {len(data)} bytes digest={runtime.digest()}")
    return 0


def _cmd_load(args: argparse.Namespace) -> int:
    with open(args.infile, "rb") as fh:
        data = fh.read()
    runtime = Runtime("loader")
    build_doc(runtime)
    runtime.load_bytes(data)
    print(f"loaded {len(data)} bytes digest={runtime.digest()}")
    print(json.dumps(runtime.observable(), default=str, sort_keys=True))
    return 0


def _cmd_relay_serve(args: argparse.Namespace) -> int:
    try:
        asyncio.run(serve_forever(args.host, args.port, log=print))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_relay_client(args: argparse.Namespace) -> int:
    async def run() -> str:
        host, _, port = args.addr.partition(":")
        runtime = Runtime(None, mode=Mode.NOVC)
        doc = build_doc(runtime)
        client = RelayClient(runtime)
        await client.connect(host or "127.0.0.1", int(port or 7070))
        rng = random.Random(args.seed)
        for _ in range(args.ops):
            apply_random_op(rng, doc)
            await asyncio.sleep(args.interval)
        await client.drain()
        await asyncio.sleep(args.linger)
        await client.close()
        return runtime.digest()

    digest = asyncio.run(run())
    print(f"doc={args.doc} digest={digest}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="crdtkit", description="Multi-replica simulation and testing harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuzz", help="random-op convergence fuzzing")
    p.add_argument("--replicas", type=int, default=4)
    p.add_argument("--ops", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dup", type=float, default=0.0)
    p.add_argument("--drop", type=float, default=0.0)
    p.add_argument("--latency", default="0:200", help="LO:HI in virtual ms")
    p.add_argument("--merge-every", type=int, default=0)
    p.add_argument("--check-every", type=int, default=0)
    p.add_argument("--novc", action="store_true", help="disable dependency metadata")
    p.add_argument("--mutate", action="store_true", help="fault-injection self-test")
    p.set_defaults(fn=_cmd_fuzz)

    p = sub.add_parser("scenario", help="replay a named concurrent-editing scenario")
    p.add_argument("name", choices=sorted(SCENARIOS) + ["all"])
    p.set_defaults(fn=_cmd_scenario)

    p = sub.add_parser("bench", help="replay a typing trace and report costs")
    p.add_argument("--trace", required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--batch-ms", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--latency", default="0:50")
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("bench-codec", help="compare codec backends")
    p.add_argument("--iterations", type=int, default=20000)
    p.set_defaults(fn=_cmd_bench_codec)

    p = sub.add_parser("gen-trace", help="generate a synthetic typing trace")
    p.add_argument("--chars", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-pos", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_trace)

    p = sub.add_parser("convert-trace", help="convert per-op triples JSON to a trace")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_convert_trace)

    p = sub.add_parser("save", help="save a scripted document to a file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ops", type=int, default=200)
    p.set_defaults(fn=_cmd_save)

    p = sub.add_parser("load", help="load a saved document and print its state")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(fn=_cmd_load)

    p_relay = sub.add_parser("relay", help="message relay service")
    relay_sub = p_relay.add_subparsers(dest="relay_command", required=True)
    p = relay_sub.add_parser("serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7070)
    p.set_defaults(fn=_cmd_relay_serve)
    p = relay_sub.add_parser("client")
    p.add_argument("--addr", required=True, help="HOST:PORT")
    p.add_argument("--doc", default="recipe")
    p.add_argument("--ops", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=float, default=0.05)
    p.add_argument("--linger", type=float, default=1.0)
    p.set_defaults(fn=_cmd_relay_client)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
