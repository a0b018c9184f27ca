"""chunkfmt framing, just enough for structure-preserving mutation.

A document is the magic "FZ01" followed by chunks laid out as a 4-byte
big-endian body length, a 4-byte type, the body, and one XOR checksum byte
over the body.  The server never interprets fields it does not rewrite, and
split() deliberately skips checksum verification: the stub repairs whichever
chunk it touches and leaves the rest byte-for-byte alone.
"""

from __future__ import annotations

from dataclasses import dataclass

MAGIC = b"FZ01"


def xor_checksum(body: bytes) -> int:
    ck = 0
    for b in body:
        ck ^= b
    return ck


@dataclass
class Chunk:
    ctype: bytes
    body: bytearray
    ck: int


def split(payload: bytes):
    """Frame a document into chunks, or None if the framing is broken."""
    if len(payload) < 4 or payload[:4] != MAGIC:
        return None
    chunks = []
    pos = 4
    while pos < len(payload):
        if len(payload) - pos < 9:
            return None
        length = int.from_bytes(payload[pos : pos + 4], "big")
        if len(payload) - pos < 9 + length:
            return None
        body_end = pos + 8 + length
        chunks.append(
            Chunk(
                ctype=payload[pos + 4 : pos + 8],
                body=bytearray(payload[pos + 8 : body_end]),
                ck=payload[body_end],
            )
        )
        pos = body_end + 1
    return chunks


def join(chunks) -> bytes:
    out = bytearray(MAGIC)
    for ch in chunks:
        out += len(ch.body).to_bytes(4, "big")
        out += ch.ctype
        out += ch.body
        out.append(ch.ck)
    return bytes(out)


def build(ctype: bytes, body: bytes = b"") -> bytes:
    """One well-formed chunk with its checksum, for fixtures and tests."""
    return len(body).to_bytes(4, "big") + ctype + body + bytes([xor_checksum(body)])
