"""Line-oriented socket server speaking the mutation channel protocol.

    server greets   HELLO structfuzz-mutator 1
    client sends    REQ <id> <FORMAT> <hex>
    server replies  RES <id> <hex>   or   RES <id> VOID

One connection is served at a time and requests on it are answered in order
(generation is serialized anyway, and the client's bounded queue already
provides backpressure).  The server never dies on bad input: a malformed
request line gets a VOID when its id is readable and is dropped otherwise,
and any backend exception turns into a VOID.
"""

from __future__ import annotations

import os
import socket
import threading

from .hexnorm import decode_strict, sanitize

GREETING = b"HELLO structfuzz-mutator 1\n"
MAX_LINE = 1 << 20


class ListenError(Exception):
    pass


def parse_listen(text: str):
    """(family, address) for host:port, unix:/path, or a bare socket path."""
    if text.startswith("unix:"):
        return socket.AF_UNIX, text[len("unix:"):]
    if "/" in text:
        return socket.AF_UNIX, text
    host, sep, port = text.rpartition(":")
    if sep and host and port.isdigit():
        return socket.AF_INET, (host, int(port))
    raise ListenError(f"cannot parse listen address {text!r}")


def _void(rid: int) -> bytes:
    return f"RES {rid} VOID\n".encode("ascii")


def handle_line(line: bytes, mutate) -> bytes | None:
    """One reply for one input line, or None when the line is ignored."""
    parts = line.rstrip(b"\r").split()
    if len(parts) < 2 or parts[0] != b"REQ" or not parts[1].isdigit():
        return None
    rid = int(parts[1])
    if len(parts) != 4:
        return _void(rid)
    try:
        tag = parts[2].decode("ascii")
        hex_text = parts[3].decode("ascii")
    except UnicodeDecodeError:
        return _void(rid)
    payload = decode_strict(hex_text)
    if payload is None:
        return _void(rid)
    try:
        mutated = mutate(payload, tag)
    except Exception:
        return _void(rid)
    if not mutated:
        return _void(rid)
    clean = sanitize(mutated.hex())
    if clean is None:
        return _void(rid)
    return f"RES {rid} {clean}\n".encode("ascii")


class MutatorServer:
    """Accept loop around handle_line(). Safe to drive from a thread."""

    def __init__(self, mutate, listen: str):
        self._mutate = mutate
        self._stop = threading.Event()
        family, address = parse_listen(listen)
        self._family = family
        self._path = address if family == socket.AF_UNIX else None
        if self._path is not None and os.path.exists(self._path):
            os.unlink(self._path)
        self._sock = socket.socket(family, socket.SOCK_STREAM)
        if family == socket.AF_INET:
            self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind(address)
        self._sock.listen(8)
        self._sock.settimeout(0.2)
        self.connections = 0
        self.requests = 0

    def endpoint(self) -> str:
        """The address a client should dial."""
        if self._path is not None:
            return self._path
        host, port = self._sock.getsockname()
        return f"{host}:{port}"

    def serve_forever(self, max_requests: int | None = None):
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self._sock.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                self.connections += 1
                self._serve_connection(conn, max_requests)
                if max_requests is not None and self.requests >= max_requests:
                    break
        finally:
            self._close_listener()

    def _serve_connection(self, conn, max_requests):
        buf = bytearray()
        discarding = False
        conn.settimeout(0.2)
        try:
            conn.sendall(GREETING)
            while not self._stop.is_set():
                newline = buf.find(b"\n")
                if newline >= 0:
                    line = bytes(buf[:newline])
                    del buf[: newline + 1]
                    if discarding:
                        discarding = False
                        continue
                    reply = handle_line(line, self._mutate)
                    if reply is not None:
                        self.requests += 1
                        conn.sendall(reply)
                        if max_requests is not None and self.requests >= max_requests:
                            return
                    continue
                if len(buf) > MAX_LINE:
                    # runaway line: drop what we have and skip to its end
                    buf.clear()
                    discarding = True
                try:
                    data = conn.recv(65536)
                except socket.timeout:
                    continue
                if not data:
                    return
                buf += data
        except OSError:
            return
        finally:
            conn.close()

    def shutdown(self):
        self._stop.set()

    def _close_listener(self):
        try:
            self._sock.close()
        except OSError:
            pass
        if self._path is not None and os.path.exists(self._path):
            os.unlink(self._path)
