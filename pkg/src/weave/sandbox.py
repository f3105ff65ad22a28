"""Isolated execution of candidate pipeline scripts.

A candidate runs as a child process in a fresh scratch directory with a
scrubbed environment. The invocation ABI is fixed: the script receives
`--data-dir` and `--output-dir` arguments and must write
`<output-dir>/metrics.json` declaring `metric_name` and `primary_metric`
(optionally a `normalization` range mapping it into [0,1], `auxiliary`
values and `wall_seconds`). The soft time budget only informs scoring; the
hard kill fires at twice the budget.

Isolation level is process + environment scrubbing + scratch working
directory. Candidates inherit no credentials and start in an empty
directory, but there is no syscall filter or filesystem namespace: do not
run scripts from untrusted generators outside a throwaway machine.
"""

from __future__ import annotations

import ast
import json
import logging
import math
import os
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    MalformedMetricsError,
    MetricOutOfRangeError,
    MetricsFileMissingError,
    SpawnFailureError,
)

logger = logging.getLogger(__name__)

TAIL_CHARS = 8000
METRICS_FILENAME = "metrics.json"

# Mirrors the task kit's scientific stack plus innocuous stdlib modules.
DEFAULT_ALLOW_LIST = frozenset(
    {
        "argparse", "collections", "csv", "dataclasses", "fractions",
        "functools", "io", "itertools", "json", "math", "os", "pathlib",
        "random", "re", "struct", "sys", "time", "typing", "warnings",
        "numpy", "scipy",
    }
)


class ExecStatus(str, Enum):
    SUCCESS = "SUCCESS"
    RUNTIME_ERROR = "RUNTIME_ERROR"
    TIMEOUT = "TIMEOUT"
    VALIDATION_ERROR = "VALIDATION_ERROR"
    METRICS_MISSING = "METRICS_MISSING"


@dataclass(frozen=True)
class MetricReport:
    primary_metric: float
    metric_name: str
    auxiliary: dict = field(default_factory=dict)
    wall_seconds_reported: float | None = None

    def to_dict(self) -> dict:
        return {
            "primary_metric": self.primary_metric,
            "metric_name": self.metric_name,
            "auxiliary": self.auxiliary,
            "wall_seconds_reported": self.wall_seconds_reported,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricReport":
        return cls(
            primary_metric=raw["primary_metric"],
            metric_name=raw["metric_name"],
            auxiliary=raw.get("auxiliary", {}),
            wall_seconds_reported=raw.get("wall_seconds_reported"),
        )


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecStatus
    exit_code: int | None
    tau_s: float
    stdout_tail: str = ""
    stderr_tail: str = ""
    metrics: MetricReport | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "exit_code": self.exit_code,
            "tau_s": self.tau_s,
            "stdout_tail": self.stdout_tail,
            "stderr_tail": self.stderr_tail,
            "metrics": self.metrics.to_dict() if self.metrics else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExecutionOutcome":
        return cls(
            status=ExecStatus(raw["status"]),
            exit_code=raw["exit_code"],
            tau_s=raw["tau_s"],
            stdout_tail=raw.get("stdout_tail", ""),
            stderr_tail=raw.get("stderr_tail", ""),
            metrics=MetricReport.from_dict(raw["metrics"]) if raw.get("metrics") else None,
        )


@dataclass(frozen=True)
class ValidationFinding:
    kind: str  # "SYNTAX" or "MISSING_DEPENDENCY"
    message: str
    line: int | None = None

    def render(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.kind}{where}: {self.message}"


@dataclass(frozen=True)
class ExecOptions:
    """How candidates are launched. Defaults target local python3."""

    interpreter_cmd: tuple[str, ...] = ("python3",)
    allow_list: frozenset[str] = DEFAULT_ALLOW_LIST
    script_filename: str = "candidate.py"
    scratch_root: Path | None = None
    # "measured" times the child on the wall clock; "reported" trusts the
    # script's wall_seconds field (0 when absent) so journals replay
    # byte-identically.
    timing_mode: str = "measured"


def _is_python(interpreter_cmd: tuple[str, ...]) -> bool:
    return bool(interpreter_cmd) and "python" in Path(interpreter_cmd[0]).name.lower()


def validate_environment(
    script: str,
    interpreter_cmd: tuple[str, ...] = ("python3",),
    allow_list: frozenset[str] = DEFAULT_ALLOW_LIST,
) -> list[ValidationFinding]:
    """Compile-only syntax check plus import scan against the allow-list.

    Nothing from the script body runs. Non-python interpreters get no
    static analysis (findings stay empty).
    """
    if not _is_python(interpreter_cmd):
        return []
    try:
        module = ast.parse(script)
    except SyntaxError as exc:
        return [ValidationFinding("SYNTAX", exc.msg or "invalid syntax", exc.lineno)]
    findings: list[ValidationFinding] = []
    for stmt in ast.walk(module):
        names: list[tuple[str, int]] = []
        if isinstance(stmt, ast.Import):
            names = [(alias.name.split(".")[0], stmt.lineno) for alias in stmt.names]
        elif isinstance(stmt, ast.ImportFrom) and stmt.module and stmt.level == 0:
            names = [(stmt.module.split(".")[0], stmt.lineno)]
        for name, lineno in names:
            if name not in allow_list:
                findings.append(
                    ValidationFinding("MISSING_DEPENDENCY", name, lineno)
                )
    return findings


def _tail(path: Path) -> str:
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError:
        return ""
    return text[-TAIL_CHARS:]


def execute(
    script: str,
    data_dir: str | os.PathLike,
    tau_max: float,
    options: ExecOptions = ExecOptions(),
) -> ExecutionOutcome:
    """Run one candidate under the time budget and parse its metric report.

    The child gets a fresh scratch directory (its cwd and --output-dir), a
    minimal environment, and its own process group; it is killed without
    appeal at 2 * tau_max.
    """
    if options.scratch_root is not None:
        Path(options.scratch_root).mkdir(parents=True, exist_ok=True)
    # resolve(): the child runs with cwd=scratch, so every path in its argv
    # must be absolute even when scratch_root was given relative
    scratch = Path(
        tempfile.mkdtemp(
            prefix="run_",
            dir=str(options.scratch_root) if options.scratch_root else None,
        )
    ).resolve()
    script_path = scratch / options.script_filename
    script_path.write_text(script, encoding="utf-8")
    # the child runs with cwd=scratch, so a relative data dir must be pinned
    argv = [
        *options.interpreter_cmd,
        str(script_path),
        "--data-dir",
        str(Path(data_dir).resolve()),
        "--output-dir",
        str(scratch),
    ]
    env = {
        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
        "HOME": str(scratch),
        "TMPDIR": str(scratch),
        "LANG": "C.UTF-8",
        "PYTHONDONTWRITEBYTECODE": "1",
    }
    stdout_path = scratch / "stdout.log"
    stderr_path = scratch / "stderr.log"
    hard_cap = 2 * tau_max

    start = time.monotonic()
    timed_out = False
    try:
        with open(stdout_path, "wb") as out, open(stderr_path, "wb") as err:
            proc = subprocess.Popen(
                argv,
                cwd=scratch,
                env=env,
                stdout=out,
                stderr=err,
                start_new_session=True,
            )
            try:
                exit_code = proc.wait(timeout=hard_cap)
            except subprocess.TimeoutExpired:
                timed_out = True
                try:
                    os.killpg(proc.pid, signal.SIGKILL)
                except ProcessLookupError:
                    pass
                proc.wait()
                exit_code = None
    except FileNotFoundError as exc:
        raise SpawnFailureError(f"interpreter not found: {argv[0]}") from exc
    tau_measured = time.monotonic() - start

    stdout_tail = _tail(stdout_path)
    stderr_tail = _tail(stderr_path)

    metrics: MetricReport | None = None
    if timed_out:
        status = ExecStatus.TIMEOUT
    elif exit_code != 0:
        status = ExecStatus.RUNTIME_ERROR
    else:
        try:
            metrics = parse_metrics(scratch)
            status = ExecStatus.SUCCESS
        except (MetricsFileMissingError, MalformedMetricsError, MetricOutOfRangeError) as exc:
            status = ExecStatus.METRICS_MISSING
            stderr_tail = (stderr_tail + f"\n[metrics] {exc}")[-TAIL_CHARS:]

    if options.timing_mode == "reported":
        # deterministic stand-in for the wall clock: scripts self-report,
        # timeouts pin to the hard cap so the efficiency term still zeroes
        if status is ExecStatus.TIMEOUT:
            tau_s = hard_cap
        elif metrics is not None and metrics.wall_seconds_reported is not None:
            tau_s = metrics.wall_seconds_reported
        else:
            tau_s = 0.0
    else:
        tau_s = tau_measured

    return ExecutionOutcome(
        status=status,
        exit_code=exit_code,
        tau_s=float(tau_s),
        stdout_tail=stdout_tail,
        stderr_tail=stderr_tail,
        metrics=metrics,
    )


def parse_metrics(scratch_dir: str | os.PathLike) -> MetricReport:
    """Read and normalize `<scratch>/metrics.json` per the invocation ABI."""
    path = Path(scratch_dir) / METRICS_FILENAME
    if not path.exists():
        raise MetricsFileMissingError(f"no {METRICS_FILENAME} in {scratch_dir}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (ValueError, OSError) as exc:
        raise MalformedMetricsError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedMetricsError(f"{path}: top level must be an object")
    if "metric_name" not in doc or not isinstance(doc["metric_name"], str):
        raise MalformedMetricsError(f"{path}: missing or non-text metric_name")
    if "primary_metric" not in doc or not isinstance(doc["primary_metric"], (int, float)):
        raise MalformedMetricsError(f"{path}: missing or non-numeric primary_metric")

    value = float(doc["primary_metric"])
    if "normalization" in doc:
        norm = doc["normalization"]
        try:
            lo, hi = float(norm["min"]), float(norm["max"])
        except (KeyError, TypeError, ValueError):
            raise MalformedMetricsError(f"{path}: normalization needs min and max") from None
        if hi <= lo:
            raise MalformedMetricsError(f"{path}: normalization range empty: [{lo}, {hi}]")
        value = (value - lo) / (hi - lo)
    if not math.isfinite(value) or not (0.0 <= value <= 1.0):
        raise MetricOutOfRangeError(
            f"{path}: primary metric {value} outside [0,1] after normalization"
        )

    aux = doc.get("auxiliary", {})
    if not isinstance(aux, dict):
        raise MalformedMetricsError(f"{path}: auxiliary must be an object")
    wall = doc.get("wall_seconds")
    if wall is not None and not isinstance(wall, (int, float)):
        raise MalformedMetricsError(f"{path}: wall_seconds must be numeric")
    return MetricReport(
        primary_metric=value,
        metric_name=doc["metric_name"],
        auxiliary=aux,
        wall_seconds_reported=float(wall) if wall is not None else None,
    )
