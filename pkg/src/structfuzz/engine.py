"""Campaign orchestration: schedule, mutate, execute, triage, report.

Loop order per iteration: pump one channel response (executed with priority),
pick the next seed, offer it to the channel, then run a batch of classic
candidates.  A fresh seed's deterministic pass runs exactly once over its
lifetime but is spread across its scheduling turns so the channel and the
rest of the corpus never starve behind one long pass.

Clocks: duration-budgeted campaigns use the wall clock.  Iteration- and
execution-budgeted campaigns use a virtual clock (one execution = 1 ms) so
identical configs replay to byte-identical stats and corpus artifacts.
"""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .channel import (
    DEFAULT_CAPACITY,
    FORMAT_TAG_RE,
    InProcessTransport,
    MutationChannel,
    SocketTransport,
)
from .corpus import Corpus, Seed, load_payloads
from .coverage import CoverageMap
from .executor import DEFAULT_TIMEOUT_MS, ProviderError, make_provider
from .hexcodec import DEFAULT_MAX_HEX
from .mutators import SpliceError, deterministic_pass, havoc, splice
from .stubmut import stub_mutate
from .targets import TARGETS

VIRTUAL_SECONDS_PER_EXEC = 0.001
STUB_ENDPOINT = "stub"

STATS_COLUMNS = (
    "elapsed_s",
    "edges_seen",
    "execs",
    "admitted_llm_direct",
    "admitted_llm_descendant",
    "admitted_other",
    "crashes",
    "void_responses",
    "channel_offers",
    "channel_evictions",
    "channel_deliveries",
)

REPORT_COLUMNS = (
    "elapsed_s",
    "edges_seen",
    "admitted_llm_direct",
    "admitted_llm_descendant",
    "admitted_other",
)


class ConfigError(Exception):
    """Bad campaign configuration; the CLI maps this to exit code 2."""


@dataclass
class CampaignConfig:
    target: str
    corpus_dir: Path
    out_dir: Path
    duration_s: float | None = None
    max_iters: int | None = None
    max_execs: int | None = None
    rng_seed: int = 0
    llm_enabled: bool = False
    endpoint: str = ""
    queue_capacity: int = DEFAULT_CAPACITY
    max_hex_len: int = DEFAULT_MAX_HEX
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    format_tag: str = ""
    stats_interval_s: float = 5.0
    batch: int = 16
    splice_prob: float = 0.2
    det_pass_max_bytes: int = 4096

    def validate(self):
        budgets = [
            b for b in (self.duration_s, self.max_iters, self.max_execs) if b is not None
        ]
        if len(budgets) != 1:
            raise ConfigError("exactly one of duration/iters/execs budget required")
        if budgets[0] <= 0:
            raise ConfigError("budget must be positive")
        if self.queue_capacity < 1:
            raise ConfigError(f"queue capacity must be >= 1, got {self.queue_capacity}")
        if self.max_hex_len < 2:
            raise ConfigError("max_hex_len must be >= 2")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if not 0.0 <= self.splice_prob <= 1.0:
            raise ConfigError("splice_prob must be in [0, 1]")
        if self.llm_enabled and not self.endpoint:
            raise ConfigError("llm mode needs an endpoint (or 'stub')")
        if not Path(self.corpus_dir).is_dir():
            raise ConfigError(f"corpus directory not found: {self.corpus_dir}")
        tag = self.resolved_format_tag()
        if FORMAT_TAG_RE.fullmatch(tag) is None:
            raise ConfigError(f"format tag must match [A-Z0-9_]{{1,16}}, got {tag!r}")

    def resolved_format_tag(self) -> str:
        if self.format_tag:
            return self.format_tag
        if self.target in TARGETS:
            return TARGETS[self.target][1]
        return "RAW"


@dataclass
class CampaignStats:
    edges_seen: int = 0
    execs: int = 0
    iterations: int = 0
    admitted_llm_direct: int = 0
    admitted_llm_descendant: int = 0
    admitted_other: int = 0
    crashes: int = 0
    void_responses: int = 0
    channel_offers: int = 0
    channel_evictions: int = 0
    channel_deliveries: int = 0
    elapsed_s: float = 0.0
    rows: list = field(default_factory=list)

    def row(self, elapsed: float) -> dict:
        return {
            "elapsed_s": round(elapsed, 3),
            "edges_seen": self.edges_seen,
            "execs": self.execs,
            "admitted_llm_direct": self.admitted_llm_direct,
            "admitted_llm_descendant": self.admitted_llm_descendant,
            "admitted_other": self.admitted_other,
            "crashes": self.crashes,
            "void_responses": self.void_responses,
            "channel_offers": self.channel_offers,
            "channel_evictions": self.channel_evictions,
            "channel_deliveries": self.channel_deliveries,
        }


def stats_csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STATS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


class Engine:
    def __init__(self, config: CampaignConfig):
        config.validate()
        self.cfg = config
        self.rng = random.Random(config.rng_seed)
        self.provider = make_provider(config.target, config.timeout_ms)
        self.cov = CoverageMap()
        self.out_dir = Path(config.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.corpus = Corpus(self.out_dir)
        self.stats = CampaignStats()
        self.format_tag = config.resolved_format_tag()
        self._use_wall_clock = config.duration_s is not None
        self._wall_start = 0.0
        self._det_iters: dict[int, object] = {}
        self.channel = None
        if config.llm_enabled:
            if config.endpoint == STUB_ENDPOINT:
                transport = InProcessTransport(stub_mutate)
            else:
                transport = SocketTransport(config.endpoint)
            self.channel = MutationChannel(
                transport, config.queue_capacity, config.max_hex_len
            )

    # -- clocks ---------------------------------------------------------

    def now(self) -> float:
        if self._use_wall_clock:
            return time.monotonic() - self._wall_start
        return self.stats.execs * VIRTUAL_SECONDS_PER_EXEC

    def _budget_left(self) -> bool:
        cfg = self.cfg
        if cfg.max_execs is not None:
            return self.stats.execs < cfg.max_execs
        if cfg.max_iters is not None:
            return self.stats.iterations < cfg.max_iters
        return self.now() < cfg.duration_s

    # -- triage ---------------------------------------------------------

    def _execute_candidate(self, payload: bytes, origin: str, parent_id):
        outcome = self.provider.execute(payload)
        self.stats.execs += 1
        verdict = self.cov.observe(outcome.trace)
        crashed = outcome.status == "crash"
        # a crasher is only worth keeping once per signature; re-finding the
        # same crash forever would flood the schedule with dead weight
        keep_crash = crashed and not self.corpus.has_crash_signature(
            verdict.new_edge_ids
        )
        if not (verdict.is_interesting or keep_crash):
            return None
        seed = Seed(
            id=self.corpus.peek_next_id(),
            payload=payload,
            origin=origin,
            parent_id=parent_id,
            found_at=self.now(),
            caused_crash=crashed,
            format_tag=self.format_tag,
        )
        self.corpus.admit(seed, verdict)
        lineage = self.corpus.lineage_origin(seed.id)
        if lineage == "llm_direct":
            self.stats.admitted_llm_direct += 1
        elif lineage == "llm_descendant":
            self.stats.admitted_llm_descendant += 1
        else:
            self.stats.admitted_other += 1
        if crashed:
            record = self.corpus.record_crash(
                seed.id, verdict.new_edge_ids, outcome.crash_reason or ""
            )
            if record is not None:
                self.stats.crashes += 1
        if payload and len(payload) <= self.cfg.det_pass_max_bytes:
            self._det_iters[seed.id] = deterministic_pass(payload)
        self.stats.edges_seen = self.cov.edges_seen
        return seed

    # -- candidate generation --------------------------------------------

    def _classic_candidates(self, seed: Seed):
        """Up to cfg.batch candidates for this scheduling turn."""
        det = self._det_iters.get(seed.id)
        if det is not None:
            out = []
            for candidate in det:
                out.append(candidate)
                if len(out) >= self.cfg.batch:
                    return out
            del self._det_iters[seed.id]  # pass exhausted; havoc from now on
            if out:
                return out
        if not seed.payload:
            return []
        out = []
        for _ in range(self.cfg.batch):
            base = seed.payload
            if len(self.corpus) >= 2 and self.rng.random() < self.cfg.splice_prob:
                other = self.corpus.get(
                    self.corpus.order[self.rng.randrange(len(self.corpus))]
                )
                if other.payload and other.payload != base:
                    try:
                        base = splice(base, other.payload, self.rng)
                    except SpliceError:
                        pass
            out.append(havoc(base, self.rng))
        return out

    # -- main loop --------------------------------------------------------

    def run(self) -> CampaignStats:
        cfg = self.cfg
        self._wall_start = time.monotonic()
        self._write_config()
        payloads = load_payloads(cfg.corpus_dir)
        if not payloads:
            raise ConfigError(f"initial corpus {cfg.corpus_dir} has no seed files")
        for payload in payloads:
            outcome = self.provider.execute(payload)
            self.stats.execs += 1
            verdict = self.cov.observe(outcome.trace)
            crashed = outcome.status == "crash"
            seed = Seed(
                id=self.corpus.peek_next_id(),
                payload=payload,
                origin="initial",
                parent_id=None,
                found_at=self.now(),
                caused_crash=crashed,
                format_tag=self.format_tag,
            )
            if self.corpus.admit(seed, verdict):
                self.stats.admitted_other += 1
                if crashed:
                    record = self.corpus.record_crash(
                        seed.id, verdict.new_edge_ids, outcome.crash_reason or ""
                    )
                    if record is not None:
                        self.stats.crashes += 1
                if payload and len(payload) <= cfg.det_pass_max_bytes:
                    self._det_iters[seed.id] = deterministic_pass(payload)
        self.stats.edges_seen = self.cov.edges_seen
        if not len(self.corpus):
            raise ConfigError("no initial seed was admitted")
        if all(not s.payload for s in self.corpus.seeds_in_order()):
            # nothing to mutate: an exec budget would never advance
            raise ConfigError("every initial seed is empty")

        next_flush = cfg.stats_interval_s
        while self._budget_left():
            self.stats.iterations += 1
            if self.channel is not None:
                response = self.channel.try_recv()
                if response is not None and response.seed_id in self.corpus:
                    self._execute_candidate(
                        bytes.fromhex(response.hex), "llm", response.seed_id
                    )
            seed = self.corpus.next_seed(self.rng)
            if self.channel is not None:
                if seed.payload:
                    self.channel.offer(
                        seed.id, self.format_tag, seed.payload, self.now()
                    )
                self.channel.try_send()
            for candidate in self._classic_candidates(seed):
                self._execute_candidate(candidate, "classic", seed.id)
                seed.exec_count += 1
                if not self._budget_left():
                    break
            self._sync_channel_stats()
            while self.now() >= next_flush:
                self.stats.rows.append(self.stats.row(next_flush))
                next_flush += cfg.stats_interval_s

        self._sync_channel_stats()
        self.stats.elapsed_s = self.now()
        final_row = self.stats.row(self.stats.elapsed_s)
        if self.stats.rows and self.stats.rows[-1]["elapsed_s"] >= final_row["elapsed_s"]:
            self.stats.rows[-1] = final_row
        else:
            self.stats.rows.append(final_row)
        (self.out_dir / "stats.csv").write_text(
            stats_csv_text(self.stats.rows), encoding="utf-8"
        )
        if self.channel is not None:
            self.channel.close()
        return self.stats

    def _sync_channel_stats(self):
        if self.channel is None:
            return
        self.stats.void_responses = self.channel.void_responses
        self.stats.channel_offers = self.channel.offers
        self.stats.channel_evictions = self.channel.evictions
        self.stats.channel_deliveries = self.channel.deliveries

    def _write_config(self):
        lines = []
        for f in fields(self.cfg):
            value = getattr(self.cfg, f.name)
            if value is None:
                continue
            lines.append(f"{f.name}={value}")
        (self.out_dir / "config.txt").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )


def run_campaign(config: CampaignConfig) -> CampaignStats:
    return Engine(config).run()


# -- reporting -------------------------------------------------------------


class ReportError(Exception):
    pass


def report_coverage(out_dir: Path) -> list[dict]:
    """Coverage-over-time rows (elapsed, edges, admissions by lineage class)."""
    stats_path = Path(out_dir) / "stats.csv"
    if not stats_path.is_file():
        raise ReportError(f"no stats.csv under {out_dir}")
    rows = []
    with open(stats_path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            rows.append(
                {
                    "elapsed_s": float(raw["elapsed_s"]),
                    "edges_seen": int(raw["edges_seen"]),
                    "admitted_llm_direct": int(raw["admitted_llm_direct"]),
                    "admitted_llm_descendant": int(raw["admitted_llm_descendant"]),
                    "admitted_other": int(raw["admitted_other"]),
                }
            )
    return rows


def report_csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
