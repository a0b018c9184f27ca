"""Deterministic structure-aware mutation, the reference backend.

Selection is a pure function of sha256(payload), so a request always gets
the same answer (the engine ships an in-process twin of this algorithm and
the two are kept in lockstep):

  candidates, in order: HDRX width, HDRX height (only when the first chunk
  is HDRX with an 8-byte body), then per chunk a GAMA value (4-byte body)
  or one DATA byte at digest[2] mod body length (non-empty body)
  field = candidates[digest[0] mod n]
  value = BOUNDARY_VALUES[digest[1] mod 6], advanced while it would not
          change the field
  the touched chunk's checksum is recomputed, everything else is untouched

Input that is not chunkfmt, or does not frame, gets one byte flipped at
digest[0] mod len (xor 0xFF); empty input becomes a single zero byte.
"""

from __future__ import annotations

import hashlib

from . import chunkfmt

BOUNDARY_VALUES = (0, 1, 255, 256, 65535, 65536)

CHUNK_TAG = "CHUNKFMT"


def _boundary(current: int, start: int, mask=None) -> int:
    for step in range(len(BOUNDARY_VALUES)):
        value = BOUNDARY_VALUES[(start + step) % len(BOUNDARY_VALUES)]
        if mask is not None:
            value &= mask
        if value != current:
            return value
    return current


def _candidates(chunks):
    found = []
    if chunks and chunks[0].ctype == b"HDRX" and len(chunks[0].body) == 8:
        found.append(("width", chunks[0]))
        found.append(("height", chunks[0]))
    for ch in chunks:
        if ch.ctype == b"GAMA" and len(ch.body) == 4:
            found.append(("gama", ch))
        elif ch.ctype == b"DATA" and len(ch.body) > 0:
            found.append(("data", ch))
    return found


def stub_mutate(payload: bytes, format_tag: str = CHUNK_TAG) -> bytes:
    digest = hashlib.sha256(payload).digest()
    if format_tag.upper() == CHUNK_TAG:
        chunks = chunkfmt.split(payload)
        if chunks:
            found = _candidates(chunks)
            if found:
                kind, chunk = found[digest[0] % len(found)]
                start = digest[1] % len(BOUNDARY_VALUES)
                body = chunk.body
                if kind == "width":
                    body[0:4] = _boundary(
                        int.from_bytes(body[0:4], "big"), start
                    ).to_bytes(4, "big")
                elif kind == "height":
                    body[4:8] = _boundary(
                        int.from_bytes(body[4:8], "big"), start
                    ).to_bytes(4, "big")
                elif kind == "gama":
                    body[0:4] = _boundary(
                        int.from_bytes(body, "big"), start
                    ).to_bytes(4, "big")
                else:
                    at = digest[2] % len(body)
                    body[at] = _boundary(body[at], start, mask=0xFF)
                chunk.ck = chunkfmt.xor_checksum(bytes(body))
                return chunkfmt.join(chunks)
    if not payload:
        return b"\x00"
    at = digest[0] % len(payload)
    return payload[:at] + bytes([payload[at] ^ 0xFF]) + payload[at + 1 :]
