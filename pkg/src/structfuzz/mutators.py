"""Classic byte-level mutation: deterministic pass, havoc, splice.

The deterministic pass enumerates a fixed candidate sequence per payload;
havoc stacks random operators; splice crosses two payloads.  All randomness
comes from the caller's random.Random so campaigns replay exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_MAX_LEN = 1 << 20  # havoc never grows a payload past this

ARITH_MAX = 35  # add/sub deltas run 1..35 (0 would be the identity)

INTERESTING = (0, 1, 16, 32, 64, 100, 127, 128, 255, 256, 512, 1024, 32767, 65535)
_INTERESTING_8 = tuple(v for v in INTERESTING if v <= 0xFF)

_WIDTH_MAX = {1: 0xFF, 2: 0xFFFF, 4: 0xFFFFFFFF}

HAVOC_OPS = (
    "bit_flip",
    "byte_set",
    "arith",
    "interesting",
    "delete",
    "duplicate",
    "copy",
)


class SpliceError(ValueError):
    """Raised when two payloads cannot be spliced (identical or empty)."""


@dataclass
class MutationPlan:
    """Record of what a mutation did: phase plus (operator, position, argument)."""

    phase: str
    ops_applied: list[tuple] = field(default_factory=list)


def deterministic_pass(payload: bytes):
    """Yield the fixed deterministic candidate sequence for a payload.

    Order: single-bit flips (MSB first within each byte), byte-wise add/sub
    of 1..35 wrapping (add then sub per delta), then interesting-value
    overwrites at width-aligned offsets for widths 1/2/4, little endian
    before big endian where width > 1.  Empty payload yields nothing.
    """
    n = len(payload)
    for i in range(n):
        for bit in range(8):
            out = bytearray(payload)
            out[i] ^= 0x80 >> bit
            yield bytes(out)
    for i in range(n):
        base = payload[i]
        for delta in range(1, ARITH_MAX + 1):
            out = bytearray(payload)
            out[i] = (base + delta) & 0xFF
            yield bytes(out)
            out = bytearray(payload)
            out[i] = (base - delta) & 0xFF
            yield bytes(out)
    for width in (1, 2, 4):
        values = _INTERESTING_8 if width == 1 else INTERESTING
        for pos in range(0, n - width + 1, width):
            for value in values:
                if width == 1:
                    out = bytearray(payload)
                    out[pos] = value
                    yield bytes(out)
                else:
                    out = bytearray(payload)
                    out[pos : pos + width] = value.to_bytes(width, "little")
                    yield bytes(out)
                    out = bytearray(payload)
                    out[pos : pos + width] = value.to_bytes(width, "big")
                    yield bytes(out)


def deterministic_pass_size(n: int) -> int:
    """Closed-form candidate count for an n-byte payload."""
    if n == 0:
        return 0
    return 8 * n + 70 * n + 9 * n + 28 * (n // 2) + 28 * (n // 4)


def _op_bit_flip(buf, rng):
    pos = rng.randrange(len(buf))
    bit = rng.randrange(8)
    buf[pos] ^= 0x80 >> bit
    return ("bit_flip", pos, bit)


def _op_byte_set(buf, rng):
    pos = rng.randrange(len(buf))
    val = rng.randrange(256)
    buf[pos] = val
    return ("byte_set", pos, val)


def _op_arith(buf, rng):
    pos = rng.randrange(len(buf))
    delta = rng.randrange(1, ARITH_MAX + 1)
    if rng.randrange(2):
        delta = -delta
    buf[pos] = (buf[pos] + delta) & 0xFF
    return ("arith", pos, delta)


def _op_interesting(buf, rng):
    widths = [w for w in (1, 2, 4) if w <= len(buf)]
    width = rng.choice(widths)
    values = _INTERESTING_8 if width == 1 else INTERESTING
    value = rng.choice(values)
    pos = rng.randrange(len(buf) - width + 1)
    endian = "little" if width == 1 or rng.randrange(2) else "big"
    buf[pos : pos + width] = value.to_bytes(width, endian)
    return ("interesting", pos, value)


def _op_delete(buf, rng):
    if len(buf) < 2:
        return None
    length = rng.randrange(1, len(buf))
    pos = rng.randrange(len(buf) - length + 1)
    del buf[pos : pos + length]
    return ("delete", pos, length)


def _op_duplicate(buf, rng, limit):
    room = limit - len(buf)
    if room < 1:
        return None
    length = rng.randrange(1, min(len(buf), room) + 1)
    src = rng.randrange(len(buf) - length + 1)
    chunk = buf[src : src + length]
    dst = rng.randrange(len(buf) + 1)
    buf[dst:dst] = chunk
    return ("duplicate", dst, length)


def _op_copy(buf, rng):
    if len(buf) < 2:
        return None
    length = rng.randrange(1, len(buf))
    src = rng.randrange(len(buf) - length + 1)
    dst = rng.randrange(len(buf) - length + 1)
    if src == dst:
        return None
    buf[dst : dst + length] = buf[src : src + length]
    return ("copy", dst, length)


def havoc_with_plan(payload: bytes, rng, max_len: int = DEFAULT_MAX_LEN):
    """Stacked random mutation; returns (mutated bytes, MutationPlan).

    Stack size is a power of two in 1..64.  Output stays within
    [1, 2 * len(payload)] bytes, additionally capped at max_len.
    """
    if not payload:
        raise ValueError("havoc needs a non-empty payload")
    limit = min(max(2 * len(payload), 1), max_len)
    buf = bytearray(payload)
    plan = MutationPlan("havoc")
    stack = 1 << rng.randrange(7)
    for _ in range(stack):
        op = HAVOC_OPS[rng.randrange(len(HAVOC_OPS))]
        if op == "bit_flip":
            applied = _op_bit_flip(buf, rng)
        elif op == "byte_set":
            applied = _op_byte_set(buf, rng)
        elif op == "arith":
            applied = _op_arith(buf, rng)
        elif op == "interesting":
            applied = _op_interesting(buf, rng)
        elif op == "delete":
            applied = _op_delete(buf, rng)
        elif op == "duplicate":
            applied = _op_duplicate(buf, rng, limit)
        else:
            applied = _op_copy(buf, rng)
        if applied is not None:
            plan.ops_applied.append(applied)
    if not plan.ops_applied:
        # every draw was a no-op (tiny payloads); force one byte set
        plan.ops_applied.append(_op_byte_set(buf, rng))
    return bytes(buf), plan


def havoc(payload: bytes, rng, max_len: int = DEFAULT_MAX_LEN) -> bytes:
    return havoc_with_plan(payload, rng, max_len)[0]


def splice(a: bytes, b: bytes, rng) -> bytes:
    """Prefix of a up to a random split, then suffix of b from a random split.

    Raises SpliceError for identical payloads; result is never empty.
    """
    if a == b:
        raise SpliceError("cannot splice identical payloads")
    while True:
        cut_a = rng.randrange(len(a) + 1)
        cut_b = rng.randrange(len(b) + 1)
        out = a[:cut_a] + b[cut_b:]
        if out:
            return out
