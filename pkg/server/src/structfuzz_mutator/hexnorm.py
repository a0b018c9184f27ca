"""Hex normalization, same rules the fuzzer applies to our replies.

Model output loves decorating hex with whitespace and "0x"/"Ox" prefixes.
Everything the server emits goes through sanitize() first so a reply is
either clean lowercase hex or VOID, never something in between.
"""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")
_PREFIX = re.compile(r"[0oO][xX]")
_HEX = re.compile(r"[0-9a-f]*")


def sanitize(raw: str):
    """Lowercase hex residue of raw text, or None when it cannot decode."""
    text = _WS.sub("", raw)
    text = _PREFIX.sub("", text)
    text = text.lower()
    if len(text) % 2 or _HEX.fullmatch(text) is None:
        return None
    return text


def decode_strict(text: str):
    """bytes for even-length lowercase hex, or None."""
    if len(text) % 2 or _HEX.fullmatch(text) is None:
        return None
    return bytes.fromhex(text)
