"""Typing-trace files: parsing, generation, and conversion.

Native format: one event per line, tab-separated (offsetMs, kind, index,
content). Content is written raw when it is tab/newline-free, JSON-quoted
otherwise. A converter ingests the common per-op triple format
``[position, deleteCount, insertedChars...]`` (a JSON array of edits).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

KINDS = ("insert", "delete")


@dataclass(frozen=True)
class TraceEvent:
    offset_ms: int
    kind: str  # "insert" | "delete"
    index: int
    content: str = ""


def _render_content(content: str) -> str:
    if content and "\t" not in content and "\n" not in content and content[0] != '"':
        return content
    return json.dumps(content)


def _parse_content(field: str) -> str:
    if field.startswith('"'):
        return json.loads(field)
    return field


def write_trace(path: str | Path, events: list[TraceEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(
                f"{event.offset_ms}\t{event.kind}\t{event.index}\t"
                f"{_render_content(event.content)}\n"
            )


def read_trace(path: str | Path) -> list[TraceEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 3)
            if len(parts) != 4 or parts[1] not in KINDS:
                raise ValueError(f"{path}:{line_no}: bad trace line {line!r}")
            events.append(
                TraceEvent(int(parts[0]), parts[1], int(parts[2]), _parse_content(parts[3]))
            )
    return events


def synthetic_typing_trace(
    chars: int, seed: int = 0, rate_hz: float = 6.0, sequential: bool = True
) -> list[TraceEvent]:
    """A typing workload; sequential mode appends characters left to right."""
    rng = random.Random(seed)
    alphabet = "abcdefghijklmnopqrstuvwxyz      "
    step_ms = 1000.0 / rate_hz
    events = []
    length = 0
    for i in range(chars):
        offset = int(i * step_ms)
        index = length if sequential else rng.randint(0, length)
        events.append(TraceEvent(offset, "insert", index, rng.choice(alphabet)))
        length += 1
    return events


def convert_triples(
    in_path: str | Path, out_path: str | Path, rate_hz: float = 6.0
) -> int:
    """Convert a JSON array of [position, deleteCount, chars...] edits."""
    with open(in_path, "r", encoding="utf-8") as fh:
        edits = json.load(fh)
    if isinstance(edits, dict):  # tolerate a wrapping object
        for key in ("edits", "txns", "ops"):
            if key in edits:
                edits = edits[key]
                break
    step_ms = 1000.0 / rate_hz
    events = []
    tick = 0
    for edit in edits:
        position, delete_count, *inserted = edit
        for _ in range(int(delete_count)):
            events.append(TraceEvent(int(tick * step_ms), "delete", int(position)))
            tick += 1
        if inserted:
            content = "".join(inserted)
            events.append(TraceEvent(int(tick * step_ms), "insert", int(position), content))
            tick += 1
    write_trace(out_path, events)
    return len(events)
