"""Hex representation layer between raw payloads and the mutation channel.

Everything that crosses the channel (requests, responses, fine-tune records)
is lowercase hex.  Responses coming back from a mutator are untrusted text and
go through sanitize_response() before anything tries to decode them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

DEFAULT_MAX_HEX = 4096  # combined hex chars allowed through the length gate

# Formats whose payloads are embedded into prompts as raw text instead of hex.
TEXT_FORMATS = frozenset({"JSON", "XML", "LUA", "PHP", "SQL"})

PROMPT_KINDS = ("finetune_pair", "mutate_one")

_HEX_RE = re.compile(r"[0-9a-f]*")
# "0x" / "Ox" style prefixes, any case, glued to the front of hex pairs.
_PREFIX_RE = re.compile(r"[0oO][xX]")
_WS_RE = re.compile(r"\s+")


class MalformedHex(ValueError):
    """Raised when a hex string cannot be decoded."""


class LengthGateError(ValueError):
    """Raised when a payload pair exceeds the hex length gate."""


@dataclass(frozen=True)
class HexSeed:
    """A payload in wire form: lowercase hex plus the format name it claims."""

    hex: str
    format_tag: str = ""

    @property
    def byte_len(self) -> int:
        return len(self.hex) // 2


@dataclass(frozen=True)
class Prompt:
    template_id: str
    text: str


def encode(payload: bytes, format_tag: str = "") -> HexSeed:
    """Encode raw bytes as a lowercase hex seed. Empty payload gives "". """
    return HexSeed(payload.hex(), format_tag)


def decode(hexstr) -> bytes:
    """Strict inverse of encode(). Only even-length lowercase [0-9a-f]."""
    if isinstance(hexstr, HexSeed):
        hexstr = hexstr.hex
    if len(hexstr) % 2:
        raise MalformedHex(f"odd-length hex ({len(hexstr)} chars)")
    if _HEX_RE.fullmatch(hexstr) is None:
        raise MalformedHex("non-hex character in input")
    return bytes.fromhex(hexstr)


def sanitize_response(raw: str):
    """Normalize untrusted mutator output to lowercase hex, or None (Void).

    Strips all whitespace, then "0x"/"Ox"-style prefixes stuck onto hex pairs
    (models love those), lowercases, and checks the residue actually decodes.
    Returns the clean hex string, or None when the residue is undecodable.
    An empty residue is valid empty hex (sanitize of encode(x) is identity
    for every payload, including the empty one); the channel layer decides
    what to do with empty responses.
    """
    text = _WS_RE.sub("", raw)
    text = _PREFIX_RE.sub("", text)
    text = text.lower()
    if len(text) % 2 or _HEX_RE.fullmatch(text) is None:
        return None
    return text


def _hex_len(value) -> int:
    if isinstance(value, HexSeed):
        return len(value.hex)
    if isinstance(value, (bytes, bytearray)):
        return 2 * len(value)
    return len(value)


def gate_length(a, b=None, max_hex_len: int = DEFAULT_MAX_HEX) -> bool:
    """True when the combined hex length of the payload(s) fits the gate."""
    total = _hex_len(a)
    if b is not None:
        total += _hex_len(b)
    return total <= max_hex_len


# --- prompt templates -------------------------------------------------------

_PLACEHOLDERS = ("{FORMAT}", "{SEED}", "{MUTATED}")
# kind -> required placeholder counts (FORMAT, SEED, MUTATED)
_TEMPLATE_SHAPE = {
    "mutate_one": (1, 1, 0),
    "finetune_pair": (2, 1, 1),
}

_template_cache: dict[str, str] = {}


def load_template(kind: str) -> str:
    """Read the versioned template for a prompt kind and validate its slots."""
    if kind not in _TEMPLATE_SHAPE:
        raise ValueError(f"unknown prompt kind: {kind!r}")
    if kind not in _template_cache:
        text = (
            resources.files("structfuzz")
            .joinpath(f"templates/{kind}.txt")
            .read_text("utf-8")
        )
        want = _TEMPLATE_SHAPE[kind]
        got = tuple(text.count(p) for p in _PLACEHOLDERS)
        if got != want:
            raise ValueError(
                f"template {kind} has placeholder counts {got}, expected {want}"
            )
        _template_cache[kind] = text
    return _template_cache[kind]


def _render(template: str, values: dict[str, str]) -> str:
    """Substitute placeholders in one pass so payload text is never re-scanned."""
    parts = re.split(r"(\{FORMAT\}|\{SEED\}|\{MUTATED\})", template)
    return "".join(values.get(p, p) for p in parts)


def _payload_text(payload: bytes, format_tag: str) -> str:
    if format_tag.upper() in TEXT_FORMATS:
        return payload.decode("utf-8", errors="replace")
    return payload.hex()


def build_prompt(
    kind: str,
    format_tag: str,
    original: bytes,
    mutated: bytes | None = None,
    max_hex_len: int = DEFAULT_MAX_HEX,
) -> Prompt:
    """Render a prompt for the mutator.

    mutate_one takes one payload; finetune_pair takes original and mutated.
    Payloads must pass the length gate (measured in hex chars even for text
    formats) or LengthGateError is raised.
    """
    template = load_template(kind)
    if kind == "finetune_pair":
        if mutated is None:
            raise ValueError("finetune_pair needs a mutated payload")
        if not gate_length(original, mutated, max_hex_len):
            raise LengthGateError(
                f"pair of {len(original)}+{len(mutated)} bytes exceeds "
                f"{max_hex_len} hex chars"
            )
    else:
        if not gate_length(original, max_hex_len=max_hex_len):
            raise LengthGateError(
                f"{len(original)} bytes exceeds {max_hex_len} hex chars"
            )
    values = {
        "{FORMAT}": format_tag,
        "{SEED}": _payload_text(original, format_tag),
    }
    if mutated is not None:
        values["{MUTATED}"] = _payload_text(mutated, format_tag)
    return Prompt(kind, _render(template, values))
