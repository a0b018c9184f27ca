"""Turn campaign archives into fine-tune records.

A seed is valuable when its admission satisfied at least one criterion:
new_path (unseen edges), hitcount_change (no new edges but new hit-count
buckets), or crash.  Valuable seeds with a resolvable parent become
(parent, child) records; a configurable fraction of havoc noise pairs is
mixed in so a consumer cannot overfit to "every pair is a success".
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus
from .hexcodec import DEFAULT_MAX_HEX, build_prompt, gate_length
from .mutators import havoc

CRITERION_NEW_PATH = "new_path"
CRITERION_HITCOUNT = "hitcount_change"
CRITERION_CRASH = "crash"

_RECORD_FIELDS = (
    "format_tag",
    "criteria",
    "is_noise",
    "prompt",
    "original_hex",
    "mutated_hex",
)

_NOISE_RETRIES = 16


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class FinetunePair:
    format_tag: str
    criteria: tuple[str, ...]
    is_noise: bool
    prompt: str
    original_hex: str
    mutated_hex: str


@dataclass
class BuildResult:
    pairs: list[FinetunePair] = field(default_factory=list)
    real_pairs: int = 0
    noise_pairs: int = 0
    skipped_gate: int = 0
    excluded: int = 0


def detect_valuable(
    new_edges: int, new_buckets: int, caused_crash: bool
) -> tuple[str, ...]:
    """Criteria satisfied by one admission, in fixed order."""
    criteria = []
    if new_edges > 0:
        criteria.append(CRITERION_NEW_PATH)
    elif new_buckets > 0:
        criteria.append(CRITERION_HITCOUNT)
    if caused_crash:
        criteria.append(CRITERION_CRASH)
    return tuple(criteria)


def load_archive(archive_dir: Path) -> Corpus:
    """A campaign output directory is the archive format."""
    return Corpus.load(Path(archive_dir))


def build_pairs(
    corpus: Corpus,
    noise_ratio: float = 0.1,
    max_hex_len: int = DEFAULT_MAX_HEX,
    rng_seed: int = 0,
    exclude: tuple[str, ...] = (),
) -> BuildResult:
    """Emit records for every valuable child plus ceil(ratio * real) noise pairs."""
    if not 0.0 <= noise_ratio <= 0.5:
        raise DatasetError(f"noise_ratio must be in [0, 0.5], got {noise_ratio}")
    excluded_tags = {tag.upper() for tag in exclude}
    result = BuildResult()
    parent_pool: list[tuple[bytes, str]] = []
    seen_parents: set[int] = set()
    for seed in corpus.seeds_in_order():
        if seed.parent_id is None:
            continue
        if seed.format_tag.upper() in excluded_tags:
            result.excluded += 1
            continue
        new_edges, new_buckets = corpus.admission_verdicts[seed.id]
        criteria = detect_valuable(new_edges, new_buckets, seed.caused_crash)
        if not criteria:
            continue
        parent = corpus.get(seed.parent_id)
        if not gate_length(parent.payload, seed.payload, max_hex_len):
            result.skipped_gate += 1
            continue
        prompt = build_prompt(
            "finetune_pair", seed.format_tag, parent.payload, seed.payload, max_hex_len
        )
        result.pairs.append(
            FinetunePair(
                format_tag=seed.format_tag,
                criteria=criteria,
                is_noise=False,
                prompt=prompt.text,
                original_hex=parent.payload.hex(),
                mutated_hex=seed.payload.hex(),
            )
        )
        result.real_pairs += 1
        if seed.parent_id not in seen_parents and parent.payload:
            seen_parents.add(seed.parent_id)
            parent_pool.append((parent.payload, seed.format_tag))
    want_noise = math.ceil(noise_ratio * result.real_pairs)
    if want_noise and not parent_pool:
        return result
    rng = random.Random(rng_seed)
    for _ in range(want_noise):
        for _ in range(_NOISE_RETRIES):
            parent_payload, tag = parent_pool[rng.randrange(len(parent_pool))]
            mutated = havoc(parent_payload, rng, max_len=max(1, max_hex_len // 2))
            if gate_length(parent_payload, mutated, max_hex_len):
                break
        else:
            continue
        prompt = build_prompt(
            "finetune_pair", tag, parent_payload, mutated, max_hex_len
        )
        result.pairs.append(
            FinetunePair(
                format_tag=tag,
                criteria=(),
                is_noise=True,
                prompt=prompt.text,
                original_hex=parent_payload.hex(),
                mutated_hex=mutated.hex(),
            )
        )
        result.noise_pairs += 1
    return result


def export_pairs(pairs, path: Path) -> int:
    """Write newline-delimited JSON records with a fixed field order."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            record = {
                "format_tag": pair.format_tag,
                "criteria": list(pair.criteria),
                "is_noise": pair.is_noise,
                "prompt": pair.prompt,
                "original_hex": pair.original_hex,
                "mutated_hex": pair.mutated_hex,
            }
            fh.write(json.dumps(record) + "\n")
    return len(pairs)


def import_pairs(path: Path) -> list[FinetunePair]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            pairs.append(
                FinetunePair(
                    format_tag=record["format_tag"],
                    criteria=tuple(record["criteria"]),
                    is_noise=bool(record["is_noise"]),
                    prompt=record["prompt"],
                    original_hex=record["original_hex"],
                    mutated_hex=record["mutated_hex"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DatasetError(f"bad record at {path}:{lineno}: {exc}") from exc
    return pairs
