"""
Target execution under a CPU-time cutoff.

Each run spawns the target in its own session, polls the CPU time of the
whole process tree, and terminates its process group (SIGTERM, then SIGKILL
after a grace period) once the cutoff or the wall-clock guard is exceeded.
Descendants left in the group after a normal exit are swept the same way.
Results are classified SUCCESS / TIMEOUT / CRASH; failures to start the
target are HARNESS_ERROR and never count as crashes.

Example usage:
    spec = RunSpec(default_config(space), scenario.instances[0], seed=1)
    result = execute_run(scenario, spec)
    results = run_batch(scenario, [spec, ...])
"""

import json
import logging
import os
import re
import shlex
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import psutil

from src import settings
from src.paramspace import Configuration, ParameterSpace, format_value, parse_configuration
from src.scenario import FIELD_RE, ObjectiveSource, ScenarioError, ScenarioSpec, TemplateError

logger = logging.getLogger(__name__)

_RESULT_RE = re.compile(r"^\s*RESULT:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*$")


class HarnessError(RuntimeError):
    """The target could not be started (missing binary, permissions)."""


class Outcome(str, Enum):
    SUCCESS = "SUCCESS"
    TIMEOUT = "TIMEOUT"
    CRASH = "CRASH"
    HARNESS_ERROR = "HARNESS_ERROR"


@dataclass(frozen=True)
class RunSpec:
    """One (configuration, instance, seed) triple to execute."""

    config: Configuration
    instance: str
    seed: int

    @property
    def pair(self) -> Tuple[str, int]:
        return (self.instance, self.seed)


@dataclass(frozen=True)
class RunResult:
    """Outcome and metering of one target execution."""

    spec: RunSpec
    outcome: Outcome
    measured: float
    reported: Optional[float] = None
    exit_status: Union[int, str, None] = None
    wall_seconds: float = 0.0
    timestamp: str = ""
    load_tag: int = 1
    error: Optional[str] = None

    @property
    def config(self) -> Configuration:
        return self.spec.config

    @property
    def pair(self) -> Tuple[str, int]:
        return self.spec.pair

    def runtime(self, source: ObjectiveSource = ObjectiveSource.PROCESS_CPU_TIME) -> float:
        """Objective time of a successful run for the given objective source."""
        if source == ObjectiveSource.REPORTED_METRIC and self.reported is not None:
            return self.reported
        return self.measured

    def to_record(self) -> Dict[str, Any]:
        return {
            "config": self.spec.config.canonical,
            "config_id": self.spec.config.config_id,
            "instance": self.spec.instance,
            "seed": self.spec.seed,
            "outcome": self.outcome.value,
            "measured": self.measured,
            "reported": self.reported,
            "exit_status": self.exit_status,
            "wall_seconds": self.wall_seconds,
            "timestamp": self.timestamp,
            "load_tag": self.load_tag,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any], space: ParameterSpace) -> "RunResult":
        spec = RunSpec(parse_configuration(space, record["config"]), record["instance"], int(record["seed"]))
        return cls(
            spec=spec,
            outcome=Outcome(record["outcome"]),
            measured=float(record["measured"]),
            reported=None if record.get("reported") is None else float(record["reported"]),
            exit_status=record.get("exit_status"),
            wall_seconds=float(record.get("wall_seconds", 0.0)),
            timestamp=record.get("timestamp", ""),
            load_tag=int(record.get("load_tag", 1)),
            error=record.get("error"),
        )


# ============================================================================
# RUN LOG
# ============================================================================

class RunLog:
    """
    Append-only newline-delimited JSON log of RunResults.

    One record per line; configurations are stored in canonical form so the
    log can be reloaded against the space that produced it. A `fresh` log
    starts empty, discarding records left by an earlier invocation.
    """

    def __init__(self, path: Union[str, Path], fresh: bool = False):
        self.path = Path(path)
        self._lock = threading.Lock()
        if fresh and self.path.exists():
            logger.info("truncating run log %s", self.path)
            self.path.write_text("", encoding="utf-8")

    def append(self, result: RunResult):
        self.extend([result])

    def extend(self, results: Sequence[RunResult]):
        if not results:
            return
        lines = "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in results)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(lines)

    def read(self, space: ParameterSpace) -> List[RunResult]:
        """Load every record; an absent log reads as empty."""
        if not self.path.exists():
            return []
        results = []
        for number, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                results.append(RunResult.from_record(json.loads(line), space))
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{self.path}:{number}: malformed run record: {e}") from e
        return results


# ============================================================================
# COMMAND RENDERING
# ============================================================================

def render_command(scenario: ScenarioSpec, spec: RunSpec) -> List[str]:
    """
    Expand the scenario's command template for one run.

    The template is split into arguments first, so instance paths containing
    spaces or shell metacharacters stay a single argument. `{params}` must be
    a standalone argument and expands to `--NAME=VALUE` per active parameter.

    Raises:
        TemplateError: `{param:NAME}` names an inactive or unknown parameter
    """
    if spec.instance not in scenario.instances:
        raise ScenarioError(f"instance '{spec.instance}' is not part of the scenario")

    def substitute(match: re.Match) -> str:
        field_name = match.group(1)
        if field_name == "instance":
            return spec.instance
        if field_name == "seed":
            return str(spec.seed)
        if field_name.startswith("param:"):
            name = field_name[len("param:"):]
            if name not in spec.config:
                raise TemplateError(f"placeholder '{{{field_name}}}' names an inactive or unknown parameter")
            return format_value(spec.config[name])
        raise TemplateError(f"placeholder '{{{field_name}}}' must be a standalone argument")

    argv: List[str] = []
    for token in shlex.split(scenario.command):
        if token == "{params}":
            argv.extend(f"--{name}={format_value(value)}" for name, value in spec.config.items())
            continue
        argv.append(FIELD_RE.sub(substitute, token))
    return argv


def scrubbed_environment(patterns: Sequence[str]) -> Dict[str, str]:
    """Parent environment minus variables matching any glob pattern."""
    return {
        key: value for key, value in os.environ.items()
        if not any(fnmatchcase(key, pattern) for pattern in patterns)
    }


# ============================================================================
# EXECUTION
# ============================================================================

def _tree_cpu(root: Optional[psutil.Process]) -> float:
    """User+system CPU seconds of a process, its reaped children and its live descendants."""
    if root is None:
        return 0.0
    total = 0.0
    try:
        times = root.cpu_times()
        total += times.user + times.system + times.children_user + times.children_system
        descendants = root.children(recursive=True)
    except (psutil.NoSuchProcess, psutil.AccessDenied, psutil.ZombieProcess):
        return total
    for proc in descendants:
        try:
            times = proc.cpu_times()
            total += times.user + times.system
        except (psutil.NoSuchProcess, psutil.AccessDenied, psutil.ZombieProcess):
            pass
    return total


def _group_alive(pgid: int) -> bool:
    try:
        os.killpg(pgid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _signal_group(pgid: int, sig: signal.Signals) -> None:
    try:
        os.killpg(pgid, sig)
    except ProcessLookupError:
        pass


def _sweep_group(pgid: int, grace: float) -> None:
    """SIGTERM what is left of a process group, SIGKILL it after the grace period."""
    if not _group_alive(pgid):
        return
    _signal_group(pgid, signal.SIGTERM)
    deadline = time.monotonic() + grace
    while _group_alive(pgid) and time.monotonic() < deadline:
        time.sleep(settings.poll_interval())
    _signal_group(pgid, signal.SIGKILL)


def _terminate(proc: subprocess.Popen, grace: float) -> Tuple[int, Any]:
    """
    SIGTERM the target's process group, SIGKILL it after the grace period.

    The target runs in its own session, so its pid is the group id and the
    group also holds descendants that detached from it. The target itself
    is reaped with wait4 so its resource usage is kept.
    """
    _signal_group(proc.pid, signal.SIGTERM)
    deadline = time.monotonic() + grace
    pid, status, usage = os.wait4(proc.pid, os.WNOHANG)
    while pid == 0 and time.monotonic() < deadline:
        time.sleep(settings.poll_interval())
        pid, status, usage = os.wait4(proc.pid, os.WNOHANG)
    if pid == 0:
        _signal_group(proc.pid, signal.SIGKILL)
        pid, status, usage = os.wait4(proc.pid, 0)
    _sweep_group(proc.pid, max(deadline - time.monotonic(), 0.0))
    return status, usage


def _supervise(proc: subprocess.Popen, cutoff: float, guard: float) -> Tuple[int, float, Optional[str]]:
    """
    Poll the child until it exits or a limit is hit.

    Returns:
        (wait status, CPU seconds, termination reason or None)
    """
    try:
        handle: Optional[psutil.Process] = psutil.Process(proc.pid)
    except psutil.NoSuchProcess:
        handle = None
    started = time.monotonic()
    interval = settings.poll_interval()
    peak_cpu = 0.0
    reason = None
    delay = min(0.002, interval)
    while True:
        pid, status, usage = os.wait4(proc.pid, os.WNOHANG)
        if pid != 0:
            break
        peak_cpu = max(peak_cpu, _tree_cpu(handle))
        if peak_cpu >= cutoff:
            reason = "cpu"
        elif time.monotonic() - started >= guard:
            reason = "wall"
        if reason:
            logger.debug("terminating pid %d (%s limit)", proc.pid, reason)
            status, usage = _terminate(proc, settings.kill_grace())
            break
        # short runs are common; back off to the polling interval
        time.sleep(delay)
        delay = min(delay * 2, interval)
    if reason is None:
        _sweep_group(proc.pid, settings.kill_grace())
    proc.returncode = os.waitstatus_to_exitcode(status)
    final_cpu = usage.ru_utime + usage.ru_stime
    return status, max(peak_cpu, final_cpu), reason


def _exit_tag(code: int) -> Union[int, str]:
    if code >= 0:
        return code
    try:
        return signal.Signals(-code).name
    except ValueError:
        return f"SIG{-code}"


def _last_reported(output: str) -> Optional[float]:
    value = None
    for line in output.splitlines():
        match = _RESULT_RE.match(line)
        if match:
            value = float(match.group(1))
    return value


def execute_run(scenario: ScenarioSpec, spec: RunSpec) -> RunResult:
    """
    Run the target once and classify the result.

    CPU time is user+system of the child and its descendants. The run is
    terminated when CPU time reaches the cutoff, or when wall time reaches
    guard_multiplier x cutoff; both are TIMEOUT. A run whose CPU time equals
    the cutoff is a TIMEOUT. Nonzero exit or death by signal is a CRASH, as is
    a successful run without a `RESULT: <decimal>` line, or with a negative
    one, when the scenario's objective source is the reported metric.

    Raises:
        HarnessError: the target could not be spawned
    """
    argv = render_command(scenario, spec)
    cutoff = scenario.cutoff
    guard = scenario.guard_multiplier * cutoff
    timestamp = datetime.now(timezone.utc).isoformat()
    started = time.monotonic()

    with tempfile.TemporaryFile() as stdout_file:
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.DEVNULL,
                stdout=stdout_file,
                stderr=subprocess.DEVNULL,
                env=scrubbed_environment(scenario.env_scrub),
                cwd=scenario.working_dir,
                start_new_session=True,
            )
        except OSError as e:
            raise HarnessError(f"could not start '{argv[0]}': {e}") from e
        _, cpu, reason = _supervise(proc, cutoff, guard)
        wall = time.monotonic() - started
        stdout_file.seek(0)
        output = stdout_file.read().decode("utf-8", errors="replace")

    reported = _last_reported(output)
    exit_status = _exit_tag(proc.returncode)
    if reason is not None or cpu >= cutoff:
        outcome = Outcome.TIMEOUT
        cpu = max(cpu, cutoff)
    elif proc.returncode != 0:
        outcome = Outcome.CRASH
    elif scenario.objective_source == ObjectiveSource.REPORTED_METRIC and (reported is None or reported < 0):
        outcome = Outcome.CRASH
    else:
        outcome = Outcome.SUCCESS
    measured = min(cpu, guard)

    if outcome != Outcome.SUCCESS:
        logger.debug("%s on %s seed %d (exit %s, %.3fs)", outcome.value, spec.instance, spec.seed,
                     exit_status, measured)
    return RunResult(
        spec=spec,
        outcome=outcome,
        measured=measured,
        reported=reported,
        exit_status=exit_status,
        wall_seconds=wall,
        timestamp=timestamp,
        load_tag=scenario.concurrency_limit,
    )


def _execute_or_record(scenario: ScenarioSpec, spec: RunSpec) -> RunResult:
    try:
        return execute_run(scenario, spec)
    except HarnessError as e:
        logger.warning("harness error: %s", e)
        return RunResult(
            spec=spec,
            outcome=Outcome.HARNESS_ERROR,
            measured=0.0,
            timestamp=datetime.now(timezone.utc).isoformat(),
            load_tag=scenario.concurrency_limit,
            error=str(e),
        )


def run_batch(
    scenario: ScenarioSpec,
    specs: Sequence[RunSpec],
    log: Optional[RunLog] = None,
) -> List[RunResult]:
    """
    Execute runs with at most `scenario.concurrency_limit` targets alive at once.

    Results come back in request order, each tagged with the concurrency limit
    in force. Harness errors are returned as HARNESS_ERROR results instead of
    aborting the batch. When a run log is given the results are appended to it
    in request order.
    """
    if not specs:
        return []
    for spec in specs:
        if spec.instance not in scenario.instances:
            raise ScenarioError(f"instance '{spec.instance}' is not part of the scenario")
    workers = min(scenario.concurrency_limit, len(specs))
    logger.debug("batch of %d runs at concurrency %d", len(specs), scenario.concurrency_limit)
    if workers == 1:
        results = [_execute_or_record(scenario, spec) for spec in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _execute_or_record(scenario, s), specs))
    if log is not None:
        log.extend(results)
    return results


def harness_errors(results: Sequence[RunResult]) -> List[RunResult]:
    return [r for r in results if r.outcome == Outcome.HARNESS_ERROR]
