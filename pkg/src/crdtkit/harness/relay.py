"""A minimal message relay over TCP lines.

The relay never parses payloads: it appends each received line to an
in-memory log, echoes it to every other connection in arrival order, and
replays the whole log to late joiners. Because each connection is ordered
and the relay serializes the broadcast, arrival order is causal, so clients
may run without dependency metadata (NOVC mode).
"""

from __future__ import annotations

import asyncio
from typing import Any

from ..envelope import MessageEnvelope, decode_line, encode_line
from ..runtime import Runtime


class RelayServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.host = host
        self.port = port
        self.log: list[bytes] = []
        self._writers: set[asyncio.StreamWriter] = set()
        self._lock = asyncio.Lock()
        self._server: asyncio.AbstractServer | None = None

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._serve, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        assert self._server is not None
        self._server.close()
        await self._server.wait_closed()
        for writer in list(self._writers):
            writer.close()
        self._writers.clear()

    async def _serve(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        async with self._lock:
            for line in self.log:
                writer.write(line)
            await writer.drain()
            self._writers.add(writer)
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                async with self._lock:
                    self.log.append(line)
                    for other in list(self._writers):
                        if other is not writer:
                            other.write(line)
        finally:
            async with self._lock:
                self._writers.discard(writer)
            writer.close()


class RelayClient:
    """Pumps a runtime's envelopes through a relay connection."""

    def __init__(self, runtime: Runtime):
        self.runtime = runtime
        self.received = 0
        self._outgoing: asyncio.Queue[bytes] = asyncio.Queue()
        self._tasks: list[asyncio.Task] = []
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        runtime.on_send.append(self._on_send)

    def _on_send(self, env: MessageEnvelope) -> None:
        self._outgoing.put_nowait((encode_line(env) + "\n").encode("utf-8"))

    async def connect(self, host: str, port: int) -> None:
        self._reader, self._writer = await asyncio.open_connection(host, port)
        self._tasks = [
            asyncio.ensure_future(self._pump_out()),
            asyncio.ensure_future(self._pump_in()),
        ]

    async def close(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except (asyncio.CancelledError, ConnectionError):
                pass
        self._tasks = []
        if self._writer is not None:
            self._writer.close()
            self._writer = None
        self._reader = None

    async def drain(self) -> None:
        """Wait until everything queued locally has been written out."""
        assert self._writer is not None
        while not self._outgoing.empty():
            await asyncio.sleep(0)
        await self._writer.drain()

    async def _pump_out(self) -> None:
        assert self._writer is not None
        while True:
            data = await self._outgoing.get()
            self._writer.write(data)
            await self._writer.drain()

    async def _pump_in(self) -> None:
        assert self._reader is not None
        while True:
            line = await self._reader.readline()
            if not line:
                return
            env = decode_line(line.decode("utf-8"))
            self.runtime.receive(env)
            self.received += 1


async def serve_forever(host: str, port: int, log: Any = None) -> None:
    server = RelayServer(host, port)
    await server.start()
    if log is not None:
        log(f"relay listening on {server.host}:{server.port}")
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()
