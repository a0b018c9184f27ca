"""Command line front end: fuzz, dataset build, report coverage.

Every fuzz flag can also come from a flat key=value config file (--config);
explicit flags win over file values, unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .corpus import CorpusError
from .dataset import DatasetError, build_pairs, export_pairs, load_archive
from .engine import (
    CampaignConfig,
    ConfigError,
    ReportError,
    report_coverage,
    report_csv_text,
    run_campaign,
)
from .executor import ProviderError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3

_FUZZ_KEYS = {
    "target": str,
    "corpus": str,
    "out": str,
    "duration": float,
    "iters": int,
    "execs": int,
    "rng_seed": int,
    "llm": str,
    "endpoint": str,
    "queue_cap": int,
    "max_hex_len": int,
    "timeout_ms": int,
    "format": str,
    "stats_interval": float,
    "batch": int,
    "splice_prob": float,
}


def load_config_file(path: Path) -> dict:
    """Flat key=value file; blank lines and # comments are skipped."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FUZZ_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _FUZZ_KEYS[key](raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structfuzz",
        description="Coverage-guided fuzzer with a structure-aware mutation channel.",
    )
    parser.add_argument("--version", action="version", version=f"structfuzz {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fuzz = sub.add_parser("fuzz", help="run a fuzzing campaign")
    fuzz.add_argument("--config", type=Path, default=None, help="key=value config file")
    fuzz.add_argument("--target", default=None, help="built-in target name or command with @@")
    fuzz.add_argument("--corpus", type=Path, default=None, help="directory of initial seeds")
    fuzz.add_argument("--out", type=Path, default=None, help="output directory")
    fuzz.add_argument("--duration", type=float, default=None, help="budget in seconds")
    fuzz.add_argument("--iters", type=int, default=None, help="budget in schedule iterations")
    fuzz.add_argument("--execs", type=int, default=None, help="budget in executions")
    fuzz.add_argument("--rng-seed", type=int, default=None, help="campaign rng seed (default 0)")
    fuzz.add_argument("--llm", choices=("on", "off"), default=None, help="mutation channel (default off)")
    fuzz.add_argument("--endpoint", default=None, help="mutator endpoint: host:port, unix path, or 'stub'")
    fuzz.add_argument("--queue-cap", type=int, default=None, help="channel queue capacity (default 30)")
    fuzz.add_argument("--max-hex-len", type=int, default=None, help="hex length gate (default 4096)")
    fuzz.add_argument("--timeout-ms", type=int, default=None, help="per-execution timeout (default 1000)")
    fuzz.add_argument("--format", default=None, help="format tag for channel requests")

    dataset = sub.add_parser("dataset", help="dataset operations")
    dataset_sub = dataset.add_subparsers(dest="dataset_command", required=True)
    build = dataset_sub.add_parser("build", help="build fine-tune records from an archive")
    build.add_argument("--archive", type=Path, required=True, help="campaign output directory")
    build.add_argument("--out", type=Path, required=True, help="records file to write")
    build.add_argument("--noise-ratio", type=float, default=0.1, help="noise pair fraction (default 0.1)")
    build.add_argument("--max-hex-len", type=int, default=4096, help="hex length gate (default 4096)")
    build.add_argument("--exclude", action="append", default=[], help="format tag to exclude (repeatable)")
    build.add_argument("--rng-seed", type=int, default=0, help="noise rng seed (default 0)")

    report = sub.add_parser("report", help="reporting")
    report_sub = report.add_subparsers(dest="report_command", required=True)
    coverage = report_sub.add_parser("coverage", help="coverage over time by lineage class")
    coverage.add_argument("--out-dir", type=Path, required=True, help="campaign output directory")
    coverage.add_argument("--csv", type=Path, default=None, help="write CSV here instead of stdout")

    return parser


def _run_fuzz(args) -> int:
    values = load_config_file(args.config) if args.config else {}
    for key in _FUZZ_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for required in ("target", "corpus", "out"):
        if required not in values:
            raise ConfigError(f"missing required option --{required}")
    config = CampaignConfig(
        target=str(values["target"]),
        corpus_dir=Path(values["corpus"]),
        out_dir=Path(values["out"]),
        duration_s=values.get("duration"),
        max_iters=values.get("iters"),
        max_execs=values.get("execs"),
        rng_seed=int(values.get("rng_seed", 0)),
        llm_enabled=values.get("llm", "off") == "on",
        endpoint=str(values.get("endpoint", "")),
        queue_capacity=int(values.get("queue_cap", 30)),
        max_hex_len=int(values.get("max_hex_len", 4096)),
        timeout_ms=int(values.get("timeout_ms", 1000)),
        format_tag=str(values.get("format", "")),
        stats_interval_s=float(values.get("stats_interval", 5.0)),
        batch=int(values.get("batch", 16)),
        splice_prob=float(values.get("splice_prob", 0.2)),
    )
    stats = run_campaign(config)
    print(
        f"done: edges_seen={stats.edges_seen} execs={stats.execs} "
        f"iterations={stats.iterations} crashes={stats.crashes} "
        f"admitted_llm_direct={stats.admitted_llm_direct} "
        f"admitted_llm_descendant={stats.admitted_llm_descendant} "
        f"admitted_other={stats.admitted_other}"
    )
    return EXIT_OK


def _run_dataset_build(args) -> int:
    corpus = load_archive(args.archive)
    result = build_pairs(
        corpus,
        noise_ratio=args.noise_ratio,
        max_hex_len=args.max_hex_len,
        rng_seed=args.rng_seed,
        exclude=tuple(args.exclude),
    )
    export_pairs(result.pairs, args.out)
    print(
        f"wrote {len(result.pairs)} records to {args.out}: "
        f"real={result.real_pairs} noise={result.noise_pairs} "
        f"skipped_gate={result.skipped_gate} excluded={result.excluded}"
    )
    return EXIT_OK


def _run_report_coverage(args) -> int:
    rows = report_coverage(args.out_dir)
    text = report_csv_text(rows)
    if args.csv is None:
        sys.stdout.write(text)
    else:
        Path(args.csv).write_text(text, encoding="utf-8")
        print(f"wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fuzz":
            return _run_fuzz(args)
        if args.command == "dataset":
            return _run_dataset_build(args)
        return _run_report_coverage(args)
    except (ConfigError, CorpusError, DatasetError, ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())
