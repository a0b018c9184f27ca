"""Campaign engine: config validation, clocks, determinism, crash handling."""

import csv

import pytest

from structfuzz.corpus import Corpus
from structfuzz.engine import (
    STATS_COLUMNS,
    CampaignConfig,
    ConfigError,
    ReportError,
    report_coverage,
    report_csv_text,
    run_campaign,
)
from structfuzz.targets import CHUNK_MAGIC, build_chunk, make_chunkfmt_seed


@pytest.fixture()
def seed_dir(tmp_path):
    d = tmp_path / "seeds"
    d.mkdir()
    (d / "seed_0.bin").write_bytes(make_chunkfmt_seed())
    return d


def config(seed_dir, tmp_path, **kw):
    kw.setdefault("target", "chunkfmt")
    kw.setdefault("corpus_dir", str(seed_dir))
    kw.setdefault("out_dir", str(tmp_path / "out"))
    if not any(k in kw for k in ("duration_s", "max_iters", "max_execs")):
        kw["max_execs"] = 2000
    return CampaignConfig(**kw)


def read_stats(out_dir):
    with open(out_dir / "stats.csv", newline="") as fh:
        return list(csv.DictReader(fh))


# --- validation ---------------------------------------------------------------


def test_exactly_one_budget(seed_dir, tmp_path):
    with pytest.raises(ConfigError, match="exactly one"):
        CampaignConfig("chunkfmt", str(seed_dir), str(tmp_path / "o")).validate()
    with pytest.raises(ConfigError, match="exactly one"):
        config(seed_dir, tmp_path, max_execs=10, max_iters=10).validate()
    with pytest.raises(ConfigError, match="positive"):
        config(seed_dir, tmp_path, max_execs=0).validate()
    config(seed_dir, tmp_path, duration_s=1.0).validate()


@pytest.mark.parametrize(
    "kw,msg",
    [
        ({"queue_capacity": 0}, "queue capacity"),
        ({"max_hex_len": 1}, "max_hex_len"),
        ({"timeout_ms": 0}, "timeout_ms"),
        ({"batch": 0}, "batch"),
        ({"splice_prob": 1.5}, "splice_prob"),
        ({"llm_enabled": True}, "endpoint"),
        ({"format_tag": "chunk"}, "format tag"),
        ({"format_tag": "A" * 17}, "format tag"),
    ],
)
def test_field_validation(seed_dir, tmp_path, kw, msg):
    with pytest.raises(ConfigError, match=msg):
        config(seed_dir, tmp_path, **kw).validate()


def test_corpus_dir_must_exist(tmp_path):
    cfg = CampaignConfig(
        "chunkfmt", str(tmp_path / "nope"), str(tmp_path / "o"), max_execs=10
    )
    with pytest.raises(ConfigError, match="corpus directory"):
        cfg.validate()


def test_resolved_format_tag(seed_dir, tmp_path):
    assert config(seed_dir, tmp_path).resolved_format_tag() == "CHUNKFMT"
    assert (
        config(seed_dir, tmp_path, target="jsonish").resolved_format_tag() == "JSON"
    )
    assert (
        config(seed_dir, tmp_path, target="./bin @@").resolved_format_tag() == "RAW"
    )
    assert (
        config(seed_dir, tmp_path, format_tag="PDF_ISH").resolved_format_tag()
        == "PDF_ISH"
    )


def test_empty_corpus_dir_rejected(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    cfg = CampaignConfig("chunkfmt", str(empty), str(tmp_path / "o"), max_execs=10)
    with pytest.raises(ConfigError, match="no seed files"):
        run_campaign(cfg)


def test_all_empty_seeds_rejected(tmp_path):
    seeds = tmp_path / "seeds"
    seeds.mkdir()
    (seeds / "empty.bin").write_bytes(b"")
    cfg = CampaignConfig("chunkfmt", str(seeds), str(tmp_path / "o"), max_execs=10)
    with pytest.raises(ConfigError, match="empty"):
        run_campaign(cfg)


# --- runs ----------------------------------------------------------------------


def test_basic_campaign_artifacts(seed_dir, tmp_path):
    cfg = config(seed_dir, tmp_path, max_execs=4000, rng_seed=1)
    stats = run_campaign(cfg)
    out = tmp_path / "out"
    assert (out / "config.txt").is_file()
    assert "target=chunkfmt" in (out / "config.txt").read_text()
    assert stats.execs >= 4000
    assert stats.execs - 4000 < cfg.batch + 2
    assert stats.iterations > 0
    assert stats.edges_seen >= 8
    assert stats.admitted_other >= 1

    rows = read_stats(out)
    final = rows[-1]
    assert int(final["execs"]) == stats.execs
    assert int(final["edges_seen"]) == stats.edges_seen
    assert float(final["elapsed_s"]) == round(stats.execs * 0.001, 3)
    # llm columns stay zero without a channel
    assert final["admitted_llm_direct"] == "0"
    assert final["channel_offers"] == "0"

    loaded = Corpus.load(out)
    assert loaded.order[0] == 1
    assert loaded.get(1).origin == "initial"
    assert len(loaded) >= stats.admitted_other


def test_stats_cadence_on_virtual_clock(seed_dir, tmp_path):
    stats = run_campaign(config(seed_dir, tmp_path, max_execs=12000, rng_seed=3))
    rows = read_stats(tmp_path / "out")
    elapsed = [float(r["elapsed_s"]) for r in rows]
    assert elapsed[0] == 5.0
    assert elapsed[1] == 10.0
    assert elapsed == sorted(elapsed)
    assert elapsed[-1] == round(stats.execs * 0.001, 3)
    header = (tmp_path / "out" / "stats.csv").read_text().splitlines()[0]
    assert header == ",".join(STATS_COLUMNS)


def test_exec_budget_replays_identically(seed_dir, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        run_campaign(config(seed_dir, tmp_path, out_dir=str(out), max_execs=6000, rng_seed=9))
    assert (out_a / "stats.csv").read_bytes() == (out_b / "stats.csv").read_bytes()
    files_a = sorted(p.name for p in (out_a / "corpus").iterdir())
    files_b = sorted(p.name for p in (out_b / "corpus").iterdir())
    assert files_a == files_b
    for name in files_a:
        assert (out_a / "corpus" / name).read_bytes() == (
            out_b / "corpus" / name
        ).read_bytes()


def test_duration_budget_uses_wall_clock(seed_dir, tmp_path):
    stats = run_campaign(config(seed_dir, tmp_path, duration_s=0.3))
    assert stats.execs > 100
    assert stats.elapsed_s >= 0.3


def test_crashes_found_and_deduplicated(tmp_path):
    seeds = tmp_path / "seeds"
    seeds.mkdir()
    # a "bool" key 13 objects deep is one bit away from the "boom" bug
    doc = b'{"k":' * 12 + b'{"bool":1}' + b"}" * 12
    (seeds / "near_boom.bin").write_bytes(doc)
    cfg = CampaignConfig(
        "jsonish", str(seeds), str(tmp_path / "out"), max_execs=25000, rng_seed=0
    )
    stats = run_campaign(cfg)
    assert stats.crashes >= 1
    loaded = Corpus.load(tmp_path / "out")
    crashers = [s for s in loaded.seeds_in_order() if s.caused_crash]
    assert crashers
    sig_files = list((tmp_path / "out" / "crashes").glob("sig_*.json"))
    assert len(sig_files) == stats.crashes
    assert len(loaded.crash_records) == stats.crashes
    # far more crashing executions happened than records kept
    assert len(sig_files) < 10


def test_stub_channel_smoke(seed_dir, tmp_path):
    cfg = config(
        seed_dir,
        tmp_path,
        max_execs=3000,
        llm_enabled=True,
        endpoint="stub",
        rng_seed=2,
    )
    stats = run_campaign(cfg)
    assert stats.channel_offers > 0
    assert stats.channel_deliveries > 0
    loaded = Corpus.load(tmp_path / "out")
    llm_seeds = [s for s in loaded.seeds_in_order() if s.origin == "llm"]
    assert len(llm_seeds) == stats.admitted_llm_direct
    rows = read_stats(tmp_path / "out")
    assert int(rows[-1]["channel_deliveries"]) == stats.channel_deliveries


def test_det_pass_size_limit_falls_back_to_havoc(seed_dir, tmp_path):
    cfg = config(seed_dir, tmp_path, max_execs=500, det_pass_max_bytes=8, rng_seed=4)
    stats = run_campaign(cfg)
    assert stats.execs >= 500  # havoc-only still fills the budget


# --- reporting -------------------------------------------------------------------


def test_report_coverage_projects_stats(seed_dir, tmp_path):
    run_campaign(config(seed_dir, tmp_path, max_execs=12000, rng_seed=5))
    out = tmp_path / "out"
    rows = report_coverage(out)
    raw = read_stats(out)
    assert len(rows) == len(raw)
    for got, want in zip(rows, raw):
        assert got["elapsed_s"] == float(want["elapsed_s"])
        assert got["edges_seen"] == int(want["edges_seen"])
        assert got["admitted_other"] == int(want["admitted_other"])
    text = report_csv_text(rows)
    assert text.splitlines()[0] == "elapsed_s,edges_seen,admitted_llm_direct,admitted_llm_descendant,admitted_other"


def test_report_requires_stats(tmp_path):
    with pytest.raises(ReportError):
        report_coverage(tmp_path)
