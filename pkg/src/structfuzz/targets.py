"""Built-in fuzzing targets with deterministic edge traces and seeded bugs.

Both targets are pure functions of the payload: they fill a sparse trace
(edge id -> hit count) and raise TargetCrash when a seeded bug fires.
Structural violations are ordinary rejects, not crashes.
"""

from __future__ import annotations


class TargetCrash(Exception):
    """A seeded bug fired; str(exc) is the bug label."""


# --- chunkfmt ----------------------------------------------------------------
#
# Layout: magic "FZ01", then chunks of
#   4-byte big-endian payload length | 4-byte ASCII type | payload | 1-byte XOR
# checksum of the payload.  First chunk must be HDRX (width u32, height u32).
# GAMA carries a 4-byte value, DATA anything, ENDX is empty and terminates.

CHUNK_MAGIC = b"FZ01"

C_SHORT_INPUT = 1
C_MAGIC_FAIL = 2
C_MAGIC_OK = 3
C_EOF_NO_ENDX = 4
C_CHUNK_HEADER_SHORT = 5
C_CHUNK_BODY_SHORT = 6
C_CKSUM_FAIL = 7
C_CKSUM_OK = 8
C_FIRST_NOT_HDRX = 9
C_TYPE_HDRX = 10
C_HDRX_DUP = 11
C_HDRX_LEN_BAD = 12
C_HDRX_W_ZERO = 13
C_HDRX_H_ZERO = 14
C_HDRX_AREA_LARGE = 15
C_HDRX_AREA_SMALL = 16
C_TYPE_GAMA = 17
C_GAMA_LEN_BAD = 18
C_GAMA_SMALL = 19
C_GAMA_MID = 20
C_GAMA_BIG = 21
C_TYPE_DATA = 22
C_DATA_ZERO_BYTE = 23
C_DATA_FF_BYTE = 24
C_BUG_B1 = 25
C_BUG_B2 = 26
C_BUG_B3 = 27
C_TYPE_ENDX = 28
C_ENDX_LEN_BAD = 29
C_TYPE_UNKNOWN = 30
C_HDRX_DIM_ONE = 31
C_HDRX_DIM_GT255 = 32
C_HDRX_DIM_GT65535 = 33

AREA_LIMIT = 1 << 16


def xor_checksum(payload: bytes) -> int:
    # Byte-wise XOR fold.  Folding a bigint halves at a time keeps the hot
    # path in C; a python for-loop over multi-KB payloads dominates exec
    # time otherwise.  Zero padding from int.from_bytes is XOR-neutral.
    n = len(payload)
    if n == 0:
        return 0
    x = int.from_bytes(payload, "big")
    width = 1 << ((n - 1).bit_length())
    while width > 1:
        half = width >> 1
        x = (x >> (half * 8)) ^ (x & ((1 << (half * 8)) - 1))
        width = half
    return x


def chunkfmt(data: bytes, trace: dict) -> None:
    def hit(edge):
        trace[edge] = trace.get(edge, 0) + 1

    if len(data) < 4:
        hit(C_SHORT_INPUT)
        return
    if data[:4] != CHUNK_MAGIC:
        hit(C_MAGIC_FAIL)
        return
    hit(C_MAGIC_OK)
    pos = 4
    end = len(data)
    first = True
    header = None
    data_seen: list[tuple[int, int]] = []
    while True:
        if pos == end:
            hit(C_EOF_NO_ENDX)
            return
        if end - pos < 9:
            hit(C_CHUNK_HEADER_SHORT)
            return
        length = int.from_bytes(data[pos : pos + 4], "big")
        ctype = data[pos + 4 : pos + 8]
        pos += 8
        if end - pos < length + 1:
            hit(C_CHUNK_BODY_SHORT)
            return
        payload = data[pos : pos + length]
        pos += length
        stored = data[pos]
        pos += 1
        if xor_checksum(payload) != stored:
            hit(C_CKSUM_FAIL)
            return
        hit(C_CKSUM_OK)
        if first:
            first = False
            if ctype != b"HDRX":
                hit(C_FIRST_NOT_HDRX)
                return
        if ctype == b"HDRX":
            hit(C_TYPE_HDRX)
            if header is not None:
                hit(C_HDRX_DUP)
                return
            if length != 8:
                hit(C_HDRX_LEN_BAD)
                return
            width = int.from_bytes(payload[0:4], "big")
            height = int.from_bytes(payload[4:8], "big")
            if width == 0:
                hit(C_HDRX_W_ZERO)
                return
            if height == 0:
                hit(C_HDRX_H_ZERO)
                return
            if width == 1 or height == 1:
                hit(C_HDRX_DIM_ONE)
            if width > 0xFF or height > 0xFF:
                hit(C_HDRX_DIM_GT255)
            if width > 0xFFFF or height > 0xFFFF:
                hit(C_HDRX_DIM_GT65535)
            if width * height > AREA_LIMIT:
                hit(C_HDRX_AREA_LARGE)
            else:
                hit(C_HDRX_AREA_SMALL)
            header = (width, height)
        elif ctype == b"GAMA":
            hit(C_TYPE_GAMA)
            if length != 4:
                hit(C_GAMA_LEN_BAD)
                return
            gamma = int.from_bytes(payload, "big")
            if gamma == 0:
                hit(C_BUG_B2)
                raise TargetCrash("B2")
            if gamma < 0x100:
                hit(C_GAMA_SMALL)
            elif gamma <= 0xFFFF:
                hit(C_GAMA_MID)
            else:
                hit(C_GAMA_BIG)
        elif ctype == b"DATA":
            hit(C_TYPE_DATA)
            if header[0] * header[1] > AREA_LIMIT:
                hit(C_BUG_B1)
                raise TargetCrash("B1")
            if 0 in payload:
                hit(C_DATA_ZERO_BYTE)
            if 0xFF in payload:
                hit(C_DATA_FF_BYTE)
            ck = xor_checksum(payload)
            for seen_ck, seen_len in data_seen:
                if seen_ck == ck and seen_len != length:
                    hit(C_BUG_B3)
                    raise TargetCrash("B3")
            data_seen.append((ck, length))
        elif ctype == b"ENDX":
            hit(C_TYPE_ENDX)
            if length != 0:
                hit(C_ENDX_LEN_BAD)
                return
            return
        else:
            hit(C_TYPE_UNKNOWN)


def build_chunk(ctype: bytes, payload: bytes = b"") -> bytes:
    return (
        len(payload).to_bytes(4, "big")
        + ctype
        + payload
        + bytes([xor_checksum(payload)])
    )


def make_chunkfmt_seed(
    width: int = 2,
    height: int = 2,
    gamma: int = 100000,
    data: bytes = b"hello",
) -> bytes:
    """A small valid document: HDRX, GAMA, DATA, ENDX."""
    hdr = width.to_bytes(4, "big") + height.to_bytes(4, "big")
    return (
        CHUNK_MAGIC
        + build_chunk(b"HDRX", hdr)
        + build_chunk(b"GAMA", gamma.to_bytes(4, "big"))
        + build_chunk(b"DATA", data)
        + build_chunk(b"ENDX")
    )


# --- jsonish ------------------------------------------------------------------
#
# Recursive-descent parser for a JSON subset: objects, arrays, double-quoted
# strings with \" \\ \n escapes, and integers.  Depth counts open containers.

J_UTF8_FAIL = 101
J_VALUE_OBJECT = 102
J_VALUE_ARRAY = 103
J_VALUE_STRING = 104
J_VALUE_INT = 105
J_OBJ_EMPTY = 106
J_OBJ_PAIR = 107
J_ARR_EMPTY = 108
J_ARR_ITEM = 109
J_STR_ESCAPE = 110
J_INT_NEG = 111
J_ERR_EOF = 112
J_ERR_UNEXPECTED = 113
J_ERR_UNTERMINATED = 114
J_ERR_TOO_DEEP = 115
J_ERR_TRAILING = 116
J_DEPTH_GT12 = 117
J_BUG_BOOM = 118
J_OK = 119

MAX_DEPTH = 32
BOOM_DEPTH = 12


class _Reject(Exception):
    def __init__(self, edge):
        self.edge = edge


def jsonish(data: bytes, trace: dict) -> None:
    def hit(edge):
        trace[edge] = trace.get(edge, 0) + 1

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        hit(J_UTF8_FAIL)
        return
    pos = 0
    end = len(text)

    def skip_ws():
        nonlocal pos
        while pos < end and text[pos] in " \t\r\n":
            pos += 1

    def parse_string() -> str:
        nonlocal pos
        pos += 1  # opening quote
        out = []
        while True:
            if pos >= end:
                raise _Reject(J_ERR_UNTERMINATED)
            c = text[pos]
            if c == '"':
                pos += 1
                return "".join(out)
            if c == "\\":
                hit(J_STR_ESCAPE)
                pos += 1
                if pos >= end:
                    raise _Reject(J_ERR_UNTERMINATED)
                esc = text[pos]
                if esc not in '"\\n':
                    raise _Reject(J_ERR_UNEXPECTED)
                out.append("\n" if esc == "n" else esc)
                pos += 1
            else:
                out.append(c)
                pos += 1

    def parse_int():
        nonlocal pos
        if text[pos] == "-":
            hit(J_INT_NEG)
            pos += 1
        start = pos
        while pos < end and text[pos].isdigit():
            pos += 1
        if pos == start:
            raise _Reject(J_ERR_UNEXPECTED)

    def parse_value(depth: int):
        nonlocal pos
        skip_ws()
        if pos >= end:
            raise _Reject(J_ERR_EOF)
        c = text[pos]
        if c == "{":
            parse_object(depth + 1)
        elif c == "[":
            parse_array(depth + 1)
        elif c == '"':
            hit(J_VALUE_STRING)
            parse_string()
        elif c == "-" or c.isdigit():
            hit(J_VALUE_INT)
            parse_int()
        else:
            raise _Reject(J_ERR_UNEXPECTED)

    def check_depth(depth: int):
        if depth > BOOM_DEPTH:
            hit(J_DEPTH_GT12)
        if depth > MAX_DEPTH:
            raise _Reject(J_ERR_TOO_DEEP)

    def parse_object(depth: int):
        nonlocal pos
        hit(J_VALUE_OBJECT)
        check_depth(depth)
        pos += 1
        skip_ws()
        if pos < end and text[pos] == "}":
            hit(J_OBJ_EMPTY)
            pos += 1
            return
        while True:
            skip_ws()
            if pos >= end or text[pos] != '"':
                raise _Reject(J_ERR_UNEXPECTED)
            key = parse_string()
            if depth > BOOM_DEPTH and key == "boom":
                hit(J_BUG_BOOM)
                raise TargetCrash("boom")
            skip_ws()
            if pos >= end or text[pos] != ":":
                raise _Reject(J_ERR_UNEXPECTED)
            pos += 1
            parse_value(depth)
            hit(J_OBJ_PAIR)
            skip_ws()
            if pos >= end:
                raise _Reject(J_ERR_EOF)
            if text[pos] == ",":
                pos += 1
                continue
            if text[pos] == "}":
                pos += 1
                return
            raise _Reject(J_ERR_UNEXPECTED)

    def parse_array(depth: int):
        nonlocal pos
        hit(J_VALUE_ARRAY)
        check_depth(depth)
        pos += 1
        skip_ws()
        if pos < end and text[pos] == "]":
            hit(J_ARR_EMPTY)
            pos += 1
            return
        while True:
            parse_value(depth)
            hit(J_ARR_ITEM)
            skip_ws()
            if pos >= end:
                raise _Reject(J_ERR_EOF)
            if text[pos] == ",":
                pos += 1
                continue
            if text[pos] == "]":
                pos += 1
                return
            raise _Reject(J_ERR_UNEXPECTED)

    try:
        parse_value(0)
        skip_ws()
        if pos != end:
            raise _Reject(J_ERR_TRAILING)
        hit(J_OK)
    except _Reject as reject:
        hit(reject.edge)


def make_boom_witness(depth: int = 13) -> bytes:
    """Nested objects deep enough that the {"boom": 1} core crashes."""
    text = '{"boom":1}'
    for _ in range(depth - 1):
        text = '{"k":' + text + "}"
    return text.encode()


# name -> (target function, default wire format tag)
TARGETS = {
    "chunkfmt": (chunkfmt, "CHUNKFMT"),
    "jsonish": (jsonish, "JSON"),
}
