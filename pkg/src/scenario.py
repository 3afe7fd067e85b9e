"""
Scenario files: a complete tuning job in one JSON document.

Example (paths relative to the scenario file):
    {
        "space_file": "../spaces/v8_partial.pcs",
        "command": "d8 {params} {instance}",
        "instances": ["../benchmarks/splay.js"],
        "cutoff": 60,
        "par_factor": 10,
        "objective_source": "process-cpu-time",
        "concurrency_limit": 8,
        "budget_runs": 2000
    }
"""

import json
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src import settings
from src.paramspace import ParameterSpace, load_space


class ScenarioError(ValueError):
    """Scenario file or ScenarioSpec is inconsistent."""


class TemplateError(ScenarioError):
    """Command template uses an unknown placeholder or an inactive parameter."""


class ObjectiveSource(str, Enum):
    PROCESS_CPU_TIME = "process-cpu-time"
    REPORTED_METRIC = "reported-metric"


FIELD_RE = re.compile(r"\{([^{}]*)\}")
_PLACEHOLDER_RE = re.compile(r"^(instance|seed|params|param:[A-Za-z_][A-Za-z0-9_.\-]*)$")


def template_fields(template: str) -> List[str]:
    """Placeholder names used in a command template, in order of appearance."""
    return FIELD_RE.findall(template)


@dataclass(frozen=True)
class ScenarioSpec:
    """
    One tuning job: target command, instances, cutoff and budgets.

    Budgets: set `budget_runs` (target runs) and/or `budget_wall_seconds`;
    the configurator stops at whichever is reached first.
    """

    space_file: str
    command: str
    instances: Tuple[str, ...]
    cutoff: float
    par_factor: int = 10
    objective_source: ObjectiveSource = ObjectiveSource.PROCESS_CPU_TIME
    concurrency_limit: int = field(default_factory=settings.default_jobs)
    guard_multiplier: float = field(default_factory=settings.guard_multiplier)
    budget_runs: Optional[int] = None
    budget_wall_seconds: Optional[float] = None
    initial_runs: Optional[int] = None
    canary_instance: Optional[str] = None
    env_scrub: Tuple[str, ...] = ()
    working_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(str(i) for i in self.instances))
        object.__setattr__(self, "env_scrub", tuple(self.env_scrub))
        object.__setattr__(self, "objective_source", ObjectiveSource(self.objective_source))
        if not self.instances:
            raise ScenarioError("instance list must not be empty")
        if len(set(self.instances)) != len(self.instances):
            raise ScenarioError("instance list contains duplicates")
        if not self.cutoff > 0:
            raise ScenarioError(f"cutoff must be positive, got {self.cutoff}")
        if self.par_factor < 1:
            raise ScenarioError(f"par_factor must be at least 1, got {self.par_factor}")
        if self.concurrency_limit < 1:
            raise ScenarioError(f"concurrency_limit must be at least 1, got {self.concurrency_limit}")
        if self.guard_multiplier < 1:
            raise ScenarioError(f"guard_multiplier must be at least 1, got {self.guard_multiplier}")
        if self.budget_runs is not None and self.budget_runs < 0:
            raise ScenarioError("budget_runs must not be negative")
        if self.budget_wall_seconds is not None and self.budget_wall_seconds <= 0:
            raise ScenarioError("budget_wall_seconds must be positive")
        if self.initial_runs is not None and self.initial_runs < 1:
            raise ScenarioError("initial_runs must be at least 1")
        if self.canary_instance is not None and self.canary_instance not in self.instances:
            raise ScenarioError(f"canary instance '{self.canary_instance}' is not in the instance list")
        for name in template_fields(self.command):
            if not _PLACEHOLDER_RE.match(name):
                raise TemplateError(f"unrecognized placeholder '{{{name}}}' in command template")

    @property
    def canary(self) -> str:
        return self.canary_instance or self.instances[0]

    @property
    def default_initial_runs(self) -> int:
        """Runs of the default configuration before racing starts (one per instance unless set)."""
        return self.initial_runs or len(self.instances)

    def with_concurrency(self, limit: int) -> "ScenarioSpec":
        return replace(self, concurrency_limit=limit)

    def load_space(self) -> ParameterSpace:
        return load_space(self.space_file)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["objective_source"] = self.objective_source.value
        data["instances"] = list(self.instances)
        data["env_scrub"] = list(self.env_scrub)
        return data


_PATH_KEYS = ("space_file", "working_dir")
_KNOWN_KEYS = set(ScenarioSpec.__dataclass_fields__)


def scenario_from_dict(data: Dict[str, Any], base_dir: Union[str, Path, None] = None) -> ScenarioSpec:
    """
    Build a ScenarioSpec from parsed JSON, resolving relative paths.

    Instance entries are resolved against `base_dir` only when such a file
    exists; otherwise they are kept as opaque identifiers.
    """
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(unknown)}")
    missing = [key for key in ("space_file", "command", "instances", "cutoff") if key not in data]
    if missing:
        raise ScenarioError(f"missing scenario keys: {', '.join(missing)}")

    values = dict(data)
    base = Path(base_dir) if base_dir is not None else None
    if base is not None:
        for key in _PATH_KEYS:
            if values.get(key) and not Path(values[key]).is_absolute():
                values[key] = str((base / values[key]).resolve())
        resolved = []
        for instance in values["instances"]:
            candidate = base / str(instance)
            resolved.append(str(candidate.resolve()) if candidate.exists() else str(instance))
        if values.get("canary_instance"):
            candidate = base / str(values["canary_instance"])
            if candidate.exists():
                values["canary_instance"] = str(candidate.resolve())
        values["instances"] = resolved
    try:
        return ScenarioSpec(**values)
    except TypeError as e:
        raise ScenarioError(f"invalid scenario: {e}") from e


def load_scenario(path: Union[str, Path]) -> ScenarioSpec:
    """Read a JSON scenario file."""
    scenario_path = Path(path)
    try:
        data = json.loads(scenario_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, IOError) as e:
        raise ScenarioError(f"could not read scenario {scenario_path}: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a JSON object")
    return scenario_from_dict(data, scenario_path.parent)


def save_scenario(scenario: ScenarioSpec, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(scenario.to_dict(), indent=2) + "\n", encoding="utf-8")
    return target
