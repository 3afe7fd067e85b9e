"""
Environment-driven defaults.

Values come from the process environment after loading an optional `.env`
file. Scenario files and CLI flags override them.

Environment overrides:
  - FLAGTUNE_POLL_INTERVAL: seconds between child CPU polls (default 0.05)
  - FLAGTUNE_KILL_GRACE: seconds between SIGTERM and SIGKILL (default 2.0)
  - FLAGTUNE_GUARD_MULTIPLIER: wall-clock guard as a multiple of the cutoff (default 2.0)
  - FLAGTUNE_JOBS: default concurrency limit (default 1)
  - FLAGTUNE_LOG_LEVEL: logging level for the CLI (default INFO)
"""

import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv(override=False)

_POLL_INTERVAL_ENV = "FLAGTUNE_POLL_INTERVAL"
_KILL_GRACE_ENV = "FLAGTUNE_KILL_GRACE"
_GUARD_MULTIPLIER_ENV = "FLAGTUNE_GUARD_MULTIPLIER"
_JOBS_ENV = "FLAGTUNE_JOBS"
_LOG_LEVEL_ENV = "FLAGTUNE_LOG_LEVEL"


def _parse_positive_float(raw: Optional[str], default: float) -> float:
    if raw is None or not raw.strip():
        return default
    value = float(raw.strip())
    return value if value > 0 else default


def _parse_positive_int(raw: Optional[str], default: int) -> int:
    if raw is None or not raw.strip():
        return default
    value = int(raw.strip())
    return value if value > 0 else default


def poll_interval() -> float:
    """Seconds between CPU-time polls of a running target."""
    return _parse_positive_float(os.environ.get(_POLL_INTERVAL_ENV), 0.05)


def kill_grace() -> float:
    """Seconds a target gets to exit after SIGTERM before it is killed."""
    return _parse_positive_float(os.environ.get(_KILL_GRACE_ENV), 2.0)


def guard_multiplier() -> float:
    """Default wall-clock guard multiplier (never below 1)."""
    return max(1.0, _parse_positive_float(os.environ.get(_GUARD_MULTIPLIER_ENV), 2.0))


def default_jobs() -> int:
    """Default number of target processes allowed at once."""
    return _parse_positive_int(os.environ.get(_JOBS_ENV), 1)


def log_level() -> str:
    """Logging level name for the command-line entry point."""
    return os.environ.get(_LOG_LEVEL_ENV, "INFO").strip().upper() or "INFO"
