"""Seed corpus: admission, scheduling, lineage, crash dedup, persistence.

Seeds admitted during a campaign are written to <out>/corpus as one file per
seed, named so that lineage survives a restart, plus an index.jsonl carrying
admission-time metadata.  Deduplicated crashes get one JSON file each under
<out>/crashes.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .coverage import NoveltyVerdict

ORIGINS = ("initial", "classic", "llm")

LINEAGE_LLM_DIRECT = "llm_direct"
LINEAGE_LLM_DESCENDANT = "llm_descendant"
LINEAGE_NON_LLM = "non_llm"

_FILENAME_RE = re.compile(r"id_(\d+),src_(initial|classic|llm),parent_(\d+|none)$")


class CorpusError(Exception):
    pass


class DuplicateSeedError(CorpusError):
    pass


class EmptyCorpusError(CorpusError):
    pass


@dataclass
class Seed:
    id: int
    payload: bytes
    origin: str
    parent_id: int | None = None
    exec_count: int = 0
    found_at: float = 0.0
    caused_crash: bool = False
    format_tag: str = ""

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if (self.origin == "initial") != (self.parent_id is None):
            raise ValueError("parent_id must be absent iff origin is initial")
        if self.parent_id is not None and self.parent_id >= self.id:
            raise ValueError("parent_id must be smaller than id")

    @property
    def filename(self) -> str:
        parent = "none" if self.parent_id is None else str(self.parent_id)
        return f"id_{self.id:06d},src_{self.origin},parent_{parent}"


@dataclass(frozen=True)
class CrashRecord:
    seed_id: int
    signature: tuple[int, ...]
    detail: str = ""

    @property
    def filename(self) -> str:
        digest = hashlib.sha1(
            ",".join(str(e) for e in self.signature).encode()
        ).hexdigest()[:16]
        return f"sig_{digest}.json"


class Corpus:
    """Admitted seeds plus the scheduler over them.

    Scheduling is round-robin in admission order with a favored front:
    a seed that has never been picked goes before any repeat.
    """

    def __init__(self, out_dir: Path | None = None):
        self.seeds: dict[int, Seed] = {}
        self.order: list[int] = []
        self.crash_records: list[CrashRecord] = []
        self.admission_verdicts: dict[int, tuple[int, int]] = {}
        self._crash_signatures: set[tuple[int, ...]] = set()
        self._fresh: deque[int] = deque()
        self._rr = 0
        self._lineage_cache: dict[int, str] = {}
        self._corpus_dir: Path | None = None
        self._crash_dir: Path | None = None
        if out_dir is not None:
            out_dir = Path(out_dir)
            self._corpus_dir = out_dir / "corpus"
            self._crash_dir = out_dir / "crashes"
            self._corpus_dir.mkdir(parents=True, exist_ok=True)
            self._crash_dir.mkdir(parents=True, exist_ok=True)
            if any(self._corpus_dir.iterdir()):
                raise CorpusError(f"output corpus {self._corpus_dir} is not empty")

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, seed_id: int) -> bool:
        return seed_id in self.seeds

    def get(self, seed_id: int) -> Seed:
        return self.seeds[seed_id]

    def seeds_in_order(self):
        return (self.seeds[i] for i in self.order)

    def peek_next_id(self) -> int:
        return self.order[-1] + 1 if self.order else 1

    def admit(self, seed: Seed, verdict: NoveltyVerdict) -> bool:
        """Store the seed if the verdict (or a crash) warrants it."""
        if seed.id in self.seeds:
            raise DuplicateSeedError(f"seed id {seed.id} already admitted")
        if self.order and seed.id <= self.order[-1]:
            raise CorpusError(f"seed ids must be monotone, got {seed.id}")
        if seed.parent_id is not None and seed.parent_id not in self.seeds:
            raise CorpusError(f"unknown parent {seed.parent_id}")
        if not (verdict.is_interesting or seed.caused_crash):
            return False
        self.seeds[seed.id] = seed
        self.order.append(seed.id)
        self.admission_verdicts[seed.id] = (verdict.new_edges, verdict.new_buckets)
        self._fresh.append(seed.id)
        if self._corpus_dir is not None:
            (self._corpus_dir / seed.filename).write_bytes(seed.payload)
            meta = {
                "id": seed.id,
                "origin": seed.origin,
                "parent_id": seed.parent_id,
                "found_at": round(seed.found_at, 6),
                "format_tag": seed.format_tag,
                "caused_crash": seed.caused_crash,
                "new_edges": verdict.new_edges,
                "new_buckets": verdict.new_buckets,
            }
            with open(self._corpus_dir / "index.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(meta) + "\n")
        return True

    def next_seed(self, rng=None) -> Seed:
        """Pick the next seed to fuzz: fresh seeds first, then round-robin."""
        if not self.order:
            raise EmptyCorpusError("corpus is empty")
        if self._fresh:
            return self.seeds[self._fresh.popleft()]
        seed_id = self.order[self._rr % len(self.order)]
        self._rr += 1
        return self.seeds[seed_id]

    def lineage_origin(self, seed_id: int) -> str:
        """Classify a seed: born from the channel, descended from one, or neither."""
        cached = self._lineage_cache.get(seed_id)
        if cached is not None:
            return cached
        chain = []
        cursor: int | None = seed_id
        result = LINEAGE_NON_LLM
        while cursor is not None:
            hit = self._lineage_cache.get(cursor)
            if hit is not None:
                result = (
                    LINEAGE_LLM_DESCENDANT if hit != LINEAGE_NON_LLM else LINEAGE_NON_LLM
                )
                break
            seed = self.seeds[cursor]
            if seed.origin == "llm":
                result = (
                    LINEAGE_LLM_DIRECT if cursor == seed_id else LINEAGE_LLM_DESCENDANT
                )
                chain.append(cursor)
                break
            chain.append(cursor)
            cursor = seed.parent_id
        for sid in chain:
            if self.seeds[sid].origin == "llm":
                self._lineage_cache[sid] = LINEAGE_LLM_DIRECT
            elif result == LINEAGE_NON_LLM:
                self._lineage_cache[sid] = LINEAGE_NON_LLM
            else:
                self._lineage_cache[sid] = LINEAGE_LLM_DESCENDANT
        return self._lineage_cache[seed_id]

    def has_crash_signature(self, signature) -> bool:
        return tuple(signature) in self._crash_signatures

    def record_crash(self, seed_id: int, signature, detail: str = ""):
        """File a crash under its signature; duplicates return None."""
        signature = tuple(signature)
        if signature in self._crash_signatures:
            return None
        self._crash_signatures.add(signature)
        record = CrashRecord(seed_id, signature, detail)
        self.crash_records.append(record)
        if self._crash_dir is not None:
            doc = {
                "seed_id": record.seed_id,
                "signature": list(record.signature),
                "detail": record.detail,
            }
            (self._crash_dir / record.filename).write_text(
                json.dumps(doc, indent=1) + "\n", encoding="utf-8"
            )
        return record

    @classmethod
    def load(cls, out_dir: Path) -> "Corpus":
        """Rebuild a corpus (read-only) from a campaign output directory."""
        out_dir = Path(out_dir)
        corpus_dir = out_dir / "corpus"
        index = corpus_dir / "index.jsonl"
        if not index.is_file():
            raise CorpusError(f"no corpus index at {index}")
        corpus = cls()
        for line in index.read_text("utf-8").splitlines():
            meta = json.loads(line)
            seed = Seed(
                id=meta["id"],
                payload=b"",
                origin=meta["origin"],
                parent_id=meta["parent_id"],
                found_at=meta["found_at"],
                caused_crash=meta["caused_crash"],
                format_tag=meta["format_tag"],
            )
            seed.payload = (corpus_dir / seed.filename).read_bytes()
            corpus.seeds[seed.id] = seed
            corpus.order.append(seed.id)
            corpus.admission_verdicts[seed.id] = (
                meta["new_edges"],
                meta["new_buckets"],
            )
        crash_dir = out_dir / "crashes"
        if crash_dir.is_dir():
            for path in sorted(crash_dir.glob("sig_*.json")):
                doc = json.loads(path.read_text("utf-8"))
                record = CrashRecord(
                    doc["seed_id"], tuple(doc["signature"]), doc["detail"]
                )
                corpus.crash_records.append(record)
                corpus._crash_signatures.add(record.signature)
        return corpus


def parse_seed_filename(name: str):
    """Recover (id, origin, parent_id) from a persisted seed filename."""
    m = _FILENAME_RE.match(name)
    if m is None:
        return None
    parent = None if m.group(3) == "none" else int(m.group(3))
    return int(m.group(1)), m.group(2), parent


def load_payloads(corpus_dir: Path) -> list[bytes]:
    """Read raw seed payloads from an input directory, sorted by filename."""
    corpus_dir = Path(corpus_dir)
    files = sorted(p for p in corpus_dir.iterdir() if p.is_file())
    return [p.read_bytes() for p in files]
