"""Asynchronous mutation channel between the fuzzing loop and a mutator.

The loop never waits on the channel: offers go into a bounded drop-oldest
queue, try_send/try_recv move at most one record each and return immediately.
If the transport dies the channel degrades (offers keep rolling) and
reconnects with exponential backoff.

Wire protocol, newline-delimited UTF-8 over a local stream socket:
    server greets   HELLO structfuzz-mutator 1
    request         REQ <seed_id> <format_tag> <hex>
    response        RES <seed_id> <hex>   |   RES <seed_id> VOID
Fields are single-space separated; hex is lowercase; format_tag matches
[A-Z0-9_]{1,16}.
"""

from __future__ import annotations

import errno
import re
import select
import socket
import time
from collections import deque
from dataclasses import dataclass

from .hexcodec import DEFAULT_MAX_HEX, gate_length, sanitize_response

PROTOCOL_GREETING = "HELLO structfuzz-mutator 1"
DEFAULT_CAPACITY = 30
FORMAT_TAG_RE = re.compile(r"[A-Z0-9_]{1,16}")

_RECV_CHUNK = 65536
_MAX_LINE_BUFFER = 1 << 20
_BACKOFF_BASE = 0.05
_BACKOFF_CAP = 5.0


class ChannelError(Exception):
    pass


@dataclass(frozen=True)
class MutationRequest:
    seed_id: int
    format_tag: str
    hex: str
    timestamp: float = 0.0


@dataclass(frozen=True)
class MutationResponse:
    seed_id: int
    hex: str | None  # None is a Void response

    @property
    def is_void(self) -> bool:
        return self.hex is None


def encode_request(req: MutationRequest) -> bytes:
    return f"REQ {req.seed_id} {req.format_tag} {req.hex}\n".encode()


def parse_response_line(line: str) -> MutationResponse | None:
    """RES line -> response; anything else (greeting, noise) -> None."""
    parts = line.split(" ")
    if len(parts) != 3 or parts[0] != "RES" or not parts[1].isdigit():
        return None
    return MutationResponse(int(parts[1]), None if parts[2] == "VOID" else parts[2])


class BoundedQueue:
    """FIFO of fixed capacity; offering to a full queue evicts the oldest."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: deque = deque()

    def __len__(self) -> int:
        return len(self._items)

    def offer(self, item):
        """Enqueue; returns the evicted oldest item, or None."""
        evicted = None
        if len(self._items) == self.capacity:
            evicted = self._items.popleft()
        self._items.append(item)
        return evicted

    def peek(self):
        return self._items[0] if self._items else None

    def peek_newest(self):
        return self._items[-1] if self._items else None

    def pop(self):
        return self._items.popleft() if self._items else None

    def snapshot(self) -> list:
        return list(self._items)


class InProcessTransport:
    """Endpoint adapter that runs a mutate function in this process.

    Behaves like a connected server: emits the greeting, answers each
    accepted request immediately.  Lets the engine run the structured
    channel with no socket at all.
    """

    def __init__(self, mutate_fn):
        self.mutate_fn = mutate_fn
        self._inbuf = bytearray((PROTOCOL_GREETING + "\n").encode())

    def try_send(self, data: bytes) -> bool:
        for line in data.decode("utf-8", errors="replace").splitlines():
            parts = line.split(" ")
            if len(parts) != 4 or parts[0] != "REQ" or not parts[1].isdigit():
                continue
            seed_id = parts[1]
            reply = f"RES {seed_id} VOID\n"
            try:
                payload = bytes.fromhex(parts[3])
                mutated = self.mutate_fn(payload, parts[2])
                clean = sanitize_response(mutated.hex()) if mutated else None
                if clean is not None:
                    reply = f"RES {seed_id} {clean}\n"
            except Exception:
                pass
            self._inbuf += reply.encode()
        return True

    def try_recv(self) -> bytes:
        data = bytes(self._inbuf)
        self._inbuf.clear()
        return data

    def close(self):
        self._inbuf.clear()


class SocketTransport:
    """Non-blocking stream socket with reconnect backoff.

    Endpoint forms: "unix:<path>" or a bare path for unix sockets,
    "host:port" for TCP.  No call here ever blocks.
    """

    def __init__(
        self,
        endpoint: str,
        backoff_base: float = _BACKOFF_BASE,
        backoff_cap: float = _BACKOFF_CAP,
    ):
        self.endpoint = endpoint
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._backoff = backoff_base
        self._next_attempt = 0.0
        self._sock: socket.socket | None = None
        self._connecting = False
        self._outbuf = bytearray()
        self.connects = 0

    def _make_socket(self):
        if self.endpoint.startswith("unix:"):
            return socket.socket(socket.AF_UNIX, socket.SOCK_STREAM), self.endpoint[5:]
        if "/" in self.endpoint:
            return socket.socket(socket.AF_UNIX, socket.SOCK_STREAM), self.endpoint
        host, _, port = self.endpoint.rpartition(":")
        if not host:
            raise ChannelError(f"bad endpoint {self.endpoint!r}, want host:port or a path")
        return socket.socket(socket.AF_INET, socket.SOCK_STREAM), (host, int(port))

    def _drop(self):
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._connecting = False
        self._outbuf.clear()
        self._next_attempt = time.monotonic() + self._backoff
        self._backoff = min(self._backoff * 2, self._backoff_cap)

    def _ensure(self) -> bool:
        if self._sock is not None and not self._connecting:
            return True
        if self._sock is not None:  # connect in flight
            _, writable, _ = select.select((), (self._sock,), (), 0)
            if not writable:
                return False
            err = self._sock.getsockopt(socket.SOL_SOCKET, socket.SO_ERROR)
            if err:
                self._drop()
                return False
            self._connecting = False
            self._backoff = self._backoff_base
            self.connects += 1
            return True
        if time.monotonic() < self._next_attempt:
            return False
        try:
            sock, addr = self._make_socket()
        except OSError:
            self._next_attempt = time.monotonic() + self._backoff
            self._backoff = min(self._backoff * 2, self._backoff_cap)
            return False
        sock.setblocking(False)
        err = sock.connect_ex(addr)
        if err == 0:
            self._sock = sock
            self._backoff = self._backoff_base
            self.connects += 1
            return True
        if err in (errno.EINPROGRESS, errno.EWOULDBLOCK, errno.EAGAIN):
            self._sock = sock
            self._connecting = True
            return False
        sock.close()
        self._next_attempt = time.monotonic() + self._backoff
        self._backoff = min(self._backoff * 2, self._backoff_cap)
        return False

    def _flush(self) -> bool:
        """Push buffered bytes; True when the buffer is empty."""
        if not self._outbuf:
            return True
        try:
            sent = self._sock.send(self._outbuf)
        except (BlockingIOError, InterruptedError):
            return False
        except OSError:
            self._drop()
            return False
        del self._outbuf[:sent]
        return not self._outbuf

    def try_send(self, data: bytes) -> bool:
        """Accept one record for delivery; False means try again later."""
        if not self._ensure():
            return False
        if not self._flush():
            return False
        try:
            sent = self._sock.send(data)
        except (BlockingIOError, InterruptedError):
            return False
        except OSError:
            self._drop()
            return False
        if sent < len(data):
            self._outbuf += data[sent:]
        return True

    def try_recv(self) -> bytes:
        if self._sock is None or self._connecting:
            self._ensure()
            return b""
        self._flush()
        try:
            chunk = self._sock.recv(_RECV_CHUNK)
        except (BlockingIOError, InterruptedError):
            return b""
        except OSError:
            self._drop()
            return b""
        if chunk == b"":  # orderly shutdown
            self._drop()
            return b""
        return chunk

    def close(self):
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._sock = None
        self._connecting = False
        self._outbuf.clear()


class MutationChannel:
    """Loop-facing API: offer admitted seeds, pump one record per call."""

    def __init__(
        self,
        transport,
        capacity: int = DEFAULT_CAPACITY,
        max_hex_len: int = DEFAULT_MAX_HEX,
    ):
        self.transport = transport
        self.queue = BoundedQueue(capacity)
        self.max_hex_len = max_hex_len
        self._linebuf = bytearray()
        self.offers = 0
        self.evictions = 0
        self.sent = 0
        self.deliveries = 0
        self.void_responses = 0

    def offer(self, seed_id: int, format_tag: str, payload: bytes, now: float = 0.0) -> bool:
        """Queue a mutation request unless gated or a consecutive duplicate."""
        if FORMAT_TAG_RE.fullmatch(format_tag) is None:
            raise ChannelError(f"bad format tag {format_tag!r}")
        hexstr = payload.hex()
        if not gate_length(hexstr, max_hex_len=self.max_hex_len):
            return False
        newest = self.queue.peek_newest()
        if (
            newest is not None
            and newest.seed_id == seed_id
            and newest.hex == hexstr
        ):
            return False
        evicted = self.queue.offer(MutationRequest(seed_id, format_tag, hexstr, now))
        self.offers += 1
        if evicted is not None:
            self.evictions += 1
        return True

    def try_send(self) -> bool:
        """Hand the oldest queued request to the transport if it will take it."""
        head = self.queue.peek()
        if head is None:
            return False
        if not self.transport.try_send(encode_request(head)):
            return False
        self.queue.pop()
        self.sent += 1
        return True

    def try_recv(self) -> MutationResponse | None:
        """Return at most one decodable response; count and drop voids."""
        data = self.transport.try_recv()
        if data:
            self._linebuf += data
            if len(self._linebuf) > _MAX_LINE_BUFFER:
                self._linebuf.clear()
        while True:
            nl = self._linebuf.find(b"\n")
            if nl < 0:
                return None
            line = self._linebuf[:nl].decode("utf-8", errors="replace")
            del self._linebuf[: nl + 1]
            resp = parse_response_line(line)
            if resp is None:
                continue
            if resp.hex is None:
                self.void_responses += 1
                continue
            clean = sanitize_response(resp.hex)
            if clean is None or not clean:
                self.void_responses += 1
                continue
            self.deliveries += 1
            return MutationResponse(resp.seed_id, clean)

    def close(self):
        self.transport.close()
