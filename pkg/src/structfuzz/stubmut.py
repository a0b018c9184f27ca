"""Deterministic structure-aware stand-in for a model-backed mutator.

Given a chunkfmt payload it rewrites exactly one field with a boundary value
and repairs the affected checksum; anything it cannot parse gets one byte
flipped.  The selection is a pure function of sha256(payload), so the same
request always yields the same answer.  The out-of-process mutator server
implements this same algorithm; this copy lets the engine run the structured
channel without any server.

Selection contract (kept in lockstep with the server implementation):
  digest = sha256(payload)
  candidate fields, in order: HDRX width, HDRX height (only when chunk 0 is
  HDRX with an 8-byte payload), then per chunk: GAMA value (4-byte payloads),
  DATA byte at digest[2] mod len (non-empty payloads)
  field  = candidates[digest[0] mod len(candidates)]
  value  = BOUNDARY_VALUES[digest[1] mod 6], advanced cyclically while the
           rewrite would be a no-op
  fallback: flip payload[digest[0] mod len] (xor 0xFF); b"\\x00" for empty
"""

from __future__ import annotations

import hashlib

from .targets import CHUNK_MAGIC, xor_checksum

BOUNDARY_VALUES = (0, 1, 255, 256, 65535, 65536)

CHUNK_FORMAT_TAG = "CHUNKFMT"


def _parse_frames(payload: bytes):
    """Split a payload into [length, type, body, stored_ck] frames.

    Framing only: checksums are not verified (the stub repairs whichever
    chunk it touches).  Returns None unless the whole payload is consumed.
    """
    if len(payload) < 4 or payload[:4] != CHUNK_MAGIC:
        return None
    frames = []
    pos = 4
    end = len(payload)
    while pos < end:
        if end - pos < 9:
            return None
        length = int.from_bytes(payload[pos : pos + 4], "big")
        if end - pos < 9 + length:
            return None
        frames.append(
            {
                "type": payload[pos + 4 : pos + 8],
                "body": bytearray(payload[pos + 8 : pos + 8 + length]),
                "ck": payload[pos + 8 + length],
            }
        )
        pos += 9 + length
    return frames


def _serialize(frames) -> bytes:
    out = bytearray(CHUNK_MAGIC)
    for fr in frames:
        out += len(fr["body"]).to_bytes(4, "big")
        out += fr["type"]
        out += fr["body"]
        out.append(fr["ck"])
    return bytes(out)


def _pick_value(current: int, start_index: int, mask: int | None = None) -> int:
    """First boundary value from start_index (cyclic) that changes the field."""
    for step in range(len(BOUNDARY_VALUES)):
        value = BOUNDARY_VALUES[(start_index + step) % len(BOUNDARY_VALUES)]
        effective = value & mask if mask is not None else value
        if effective != current:
            return effective
    return current  # unreachable: values are not all equal under any mask


def stub_mutate(payload: bytes, format_tag: str = CHUNK_FORMAT_TAG) -> bytes:
    digest = hashlib.sha256(payload).digest()
    if format_tag.upper() == CHUNK_FORMAT_TAG:
        frames = _parse_frames(payload)
        if frames:
            candidates = []
            first = frames[0]
            if first["type"] == b"HDRX" and len(first["body"]) == 8:
                candidates.append(("width", first))
                candidates.append(("height", first))
            for fr in frames:
                if fr["type"] == b"GAMA" and len(fr["body"]) == 4:
                    candidates.append(("gama", fr))
                elif fr["type"] == b"DATA" and len(fr["body"]) > 0:
                    candidates.append(("data", fr))
            if candidates:
                kind, frame = candidates[digest[0] % len(candidates)]
                vidx = digest[1] % len(BOUNDARY_VALUES)
                body = frame["body"]
                if kind == "width":
                    current = int.from_bytes(body[0:4], "big")
                    body[0:4] = _pick_value(current, vidx).to_bytes(4, "big")
                elif kind == "height":
                    current = int.from_bytes(body[4:8], "big")
                    body[4:8] = _pick_value(current, vidx).to_bytes(4, "big")
                elif kind == "gama":
                    current = int.from_bytes(body, "big")
                    body[0:4] = _pick_value(current, vidx).to_bytes(4, "big")
                else:
                    offset = digest[2] % len(body)
                    body[offset] = _pick_value(body[offset], vidx, mask=0xFF)
                frame["ck"] = xor_checksum(bytes(body))
                return _serialize(frames)
    if not payload:
        return b"\x00"
    i = digest[0] % len(payload)
    return payload[:i] + bytes([payload[i] ^ 0xFF]) + payload[i + 1 :]
