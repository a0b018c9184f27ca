"""Backend configuration and construction.

Two backends answer mutation requests: the deterministic structure-aware
stub (default, no dependencies) and a toy causal-LM path that exercises the
real serving shape: render prompt, generate at the configured temperature,
sanitize, decode back to bytes.  Both present the same callable signature
payload, format_tag -> bytes or None (None means VOID).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .hexnorm import decode_strict, sanitize
from .stub import stub_mutate

BACKENDS = ("stub", "model")

MUTATE_PROMPT = (
    "Here is a seed input in {FORMAT} format. Mutate it so the result stays "
    "structurally plausible but exercises new behavior in a parser. Reply "
    "with the mutated payload only, in the same representation, and nothing "
    "else.\n\nSeed:\n{SEED}\n"
)


class ConfigError(Exception):
    pass


@dataclass
class BackendConfig:
    backend: str = "stub"
    model_path: str = ""
    temperature: float = 1.0
    fp16: bool = True
    lora: bool = True
    max_input_tokens: int = 2048

    def validate(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.max_input_tokens < 8:
            raise ConfigError("max_input_tokens must be >= 8")


def _parse_bool(text: str) -> bool:
    if text in ("on", "true", "1"):
        return True
    if text in ("off", "false", "0"):
        return False
    raise ValueError(text)


_KEYS = {
    "backend": str,
    "model_path": str,
    "temperature": float,
    "fp16": _parse_bool,
    "lora": _parse_bool,
    "max_input_tokens": int,
}


def load_config_file(path) -> dict:
    """key=value lines with # comments, same shape the fuzzer side uses."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _KEYS[key](value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}")
    return values


class ModelBackend:
    """Prompt -> generate -> sanitize -> decode, over the toy model.

    The precision flag only takes effect on a GPU; CPU serving stays in
    float32 because half-precision RNN kernels are not available there.
    Generation is seeded from the payload hash so a request is reproducible.
    """

    def __init__(self, cfg: BackendConfig):
        from . import toymodel

        self._toymodel = toymodel
        self._cfg = cfg
        self._torch = toymodel._torch()
        self.model = toymodel.build_model(lora=cfg.lora, seed=0)
        if cfg.model_path:
            state = self._torch.load(cfg.model_path, map_location="cpu")
            self.model.load_state_dict(state["state_dict"])
        if cfg.fp16 and self._torch.cuda.is_available():  # pragma: no cover
            self.model = self.model.half().cuda()

    def mutate(self, payload: bytes, format_tag: str):
        tm = self._toymodel
        prompt = MUTATE_PROMPT.replace("{FORMAT}", format_tag).replace(
            "{SEED}", payload.hex()
        )
        tokens = tm.encode_text(prompt)
        if len(tokens) + 2 > self._cfg.max_input_tokens:
            return None
        self._torch.manual_seed(
            int.from_bytes(hashlib.sha256(payload).digest()[:4], "big")
        )
        max_new = min(2 * len(payload) + 32, 512)
        out = tm.generate(self.model, tokens, max_new, self._cfg.temperature)
        clean = sanitize(tm.decode_tokens(out))
        if clean is None:
            return None
        return decode_strict(clean)


def make_backend(cfg: BackendConfig):
    """The (payload, format_tag) -> bytes|None callable for a config."""
    cfg.validate()
    if cfg.backend == "stub":
        return stub_mutate
    return ModelBackend(cfg).mutate


def config_from_values(values: dict) -> BackendConfig:
    cfg = BackendConfig(**values)
    cfg.validate()
    return cfg
