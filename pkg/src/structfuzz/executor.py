"""Target execution behind a provider interface.

InProcessProvider drives the built-in python targets; ExternalCommandProvider
spawns a command per input (@@ in the argv is replaced with the input path)
and reads an edge-count dump the target writes to the path given in the
SF_COV_FILE environment variable: one "<edge_id> <count>" pair per line.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .targets import TARGETS, TargetCrash

COV_FILE_ENV = "SF_COV_FILE"
DEFAULT_TIMEOUT_MS = 1000

STATUS_OK = "ok"
STATUS_CRASH = "crash"
STATUS_TIMEOUT = "timeout"


class ProviderError(RuntimeError):
    """Provider misconfiguration; campaigns abort on this."""


@dataclass
class ExecOutcome:
    status: str
    trace: dict[int, int] = field(default_factory=dict)
    wall_time_us: int = 0
    crash_reason: str | None = None


class InProcessProvider:
    """Runs a registered python target in this process."""

    def __init__(self, target_name: str, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        if target_name not in TARGETS:
            raise ProviderError(f"unknown target {target_name!r}")
        self.target, self.default_format_tag = TARGETS[target_name]
        self.timeout_ms = timeout_ms

    def execute(self, payload: bytes, timeout_ms: int | None = None) -> ExecOutcome:
        budget_ms = self.timeout_ms if timeout_ms is None else timeout_ms
        trace: dict[int, int] = {}
        start = time.perf_counter()
        status = STATUS_OK
        reason = None
        try:
            self.target(payload, trace)
        except TargetCrash as crash:
            status = STATUS_CRASH
            reason = str(crash)
        wall_us = int((time.perf_counter() - start) * 1e6)
        if status == STATUS_OK and wall_us > budget_ms * 1000:
            status = STATUS_TIMEOUT
        return ExecOutcome(status, trace, wall_us, reason)


def _parse_dump(path: Path) -> dict[int, int]:
    trace: dict[int, int] = {}
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ProviderError(f"coverage dump unreadable: {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            edge, count = int(parts[0]), int(parts[1])
        except (IndexError, ValueError) as exc:
            raise ProviderError(
                f"malformed coverage dump line {lineno} in {path}: {line!r}"
            ) from exc
        if count > 0:
            trace[edge] = trace.get(edge, 0) + count
    return trace


class ExternalCommandProvider:
    """Runs one external process per execution.

    Crash means the process died on a signal; any normal exit status is an
    ok outcome (rejecting an input is not a crash).  On crash or timeout the
    coverage dump is read best-effort; on ok it must exist.
    """

    def __init__(self, argv, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        if isinstance(argv, str):
            argv = shlex.split(argv)
        if not argv:
            raise ProviderError("empty target command")
        if not any("@@" in part for part in argv):
            raise ProviderError("target command must contain @@ for the input path")
        self.argv = list(argv)
        self.timeout_ms = timeout_ms
        self.default_format_tag = "RAW"

    def execute(self, payload: bytes, timeout_ms: int | None = None) -> ExecOutcome:
        budget_ms = self.timeout_ms if timeout_ms is None else timeout_ms
        with tempfile.TemporaryDirectory(prefix="sfexec_") as tmp:
            input_path = Path(tmp) / "input"
            dump_path = Path(tmp) / "cov"
            input_path.write_bytes(payload)
            argv = [part.replace("@@", str(input_path)) for part in self.argv]
            env = dict(os.environ, **{COV_FILE_ENV: str(dump_path)})
            start = time.perf_counter()
            try:
                proc = subprocess.run(
                    argv,
                    env=env,
                    timeout=budget_ms / 1000.0,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.DEVNULL,
                )
            except subprocess.TimeoutExpired:
                wall_us = int((time.perf_counter() - start) * 1e6)
                trace = _parse_dump(dump_path) if dump_path.exists() else {}
                return ExecOutcome(STATUS_TIMEOUT, trace, wall_us)
            except FileNotFoundError as exc:
                raise ProviderError(f"target command not found: {exc}") from exc
            wall_us = int((time.perf_counter() - start) * 1e6)
            if proc.returncode < 0:
                trace = _parse_dump(dump_path) if dump_path.exists() else {}
                return ExecOutcome(
                    STATUS_CRASH, trace, wall_us, f"signal {-proc.returncode}"
                )
            if not dump_path.exists():
                raise ProviderError(
                    f"target wrote no coverage dump at {dump_path} "
                    f"(exit status {proc.returncode})"
                )
            return ExecOutcome(STATUS_OK, _parse_dump(dump_path), wall_us)


def make_provider(target_spec: str, timeout_ms: int = DEFAULT_TIMEOUT_MS):
    """Registry name -> in-process provider; anything else is a command line."""
    if target_spec in TARGETS:
        return InProcessProvider(target_spec, timeout_ms)
    return ExternalCommandProvider(target_spec, timeout_ms)
