"""
Scoring of run results: PAR-k, per-instance aggregates, relative improvement, ECDFs.

PAR-k (penalized average runtime) is the mean over runs of the CPU time of
successful runs, with timed-out and crashing runs counted as k x cutoff.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from src.paramspace import Configuration
from src.runner import Outcome, RunResult
from src.scenario import ObjectiveSource, ScenarioSpec


class ObjectiveError(ValueError):
    """Scores cannot be computed from the given inputs."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Cutoff, penalization factor and which time a successful run contributes."""

    cutoff: float
    k: int = 10
    source: ObjectiveSource = ObjectiveSource.PROCESS_CPU_TIME

    def __post_init__(self):
        object.__setattr__(self, "source", ObjectiveSource(self.source))
        if not self.cutoff > 0:
            raise ObjectiveError(f"cutoff must be positive, got {self.cutoff}")
        if self.k < 1:
            raise ObjectiveError(f"penalization factor must be at least 1, got {self.k}")

    @classmethod
    def from_scenario(cls, scenario: ScenarioSpec) -> "ObjectiveSpec":
        return cls(cutoff=scenario.cutoff, k=scenario.par_factor, source=scenario.objective_source)

    @property
    def penalty(self) -> float:
        return self.k * self.cutoff

    def contribution(self, result: RunResult) -> float:
        """PAR-k contribution of one run."""
        if result.outcome == Outcome.SUCCESS:
            return result.runtime(self.source)
        if result.outcome in (Outcome.TIMEOUT, Outcome.CRASH):
            return self.penalty
        raise ObjectiveError(f"harness error in run on {result.spec.instance}: {result.error}")


def par_score(results: Sequence[RunResult], spec: ObjectiveSpec) -> float:
    """
    Penalized average runtime over a list of runs.

    Raises:
        ObjectiveError: empty input or a harness-error result
    """
    if not results:
        raise ObjectiveError("cannot score an empty run list")
    values = [spec.contribution(r) for r in results]
    return sum(values) / len(values)


@dataclass(frozen=True)
class ScoreReport:
    """PAR-k of one configuration per instance and overall (run-weighted)."""

    config_id: str
    per_instance: Dict[str, float]
    overall: float
    counts: Dict[Outcome, int]
    instance_counts: Dict[str, Dict[Outcome, int]] = field(default_factory=dict)

    @property
    def n_runs(self) -> int:
        return sum(n for outcome, n in self.counts.items() if outcome != Outcome.HARNESS_ERROR)

    def rows(self) -> List[Dict[str, object]]:
        """Machine-readable rows `config_id,instance,par_k,n_success,n_timeout,n_crash`."""
        rows = []
        for instance, score in self.per_instance.items():
            counts = self.instance_counts.get(instance, {})
            rows.append({
                "config_id": self.config_id,
                "instance": instance,
                "par_k": score,
                "n_success": counts.get(Outcome.SUCCESS, 0),
                "n_timeout": counts.get(Outcome.TIMEOUT, 0),
                "n_crash": counts.get(Outcome.CRASH, 0),
            })
        return rows


def _results_of(history, config: Configuration) -> List[RunResult]:
    if hasattr(history, "results_for"):
        return list(history.results_for(config))
    return [r for r in history if r.spec.config == config]


def aggregate_score(
    history: Union[Sequence[RunResult], "object"],
    config: Configuration,
    instances: Sequence[str],
    spec: ObjectiveSpec,
) -> ScoreReport:
    """
    Per-instance and overall PAR-k of `config` over the requested instances.

    `history` is a RunHistory or a plain sequence of RunResults. The overall
    score is PAR-k over the pooled runs (run-weighted), not the mean of the
    per-instance scores. Harness-error runs are excluded and only counted.

    Raises:
        ObjectiveError: a requested instance has no scorable run of `config`
    """
    wanted = list(dict.fromkeys(instances))
    by_instance: Dict[str, List[RunResult]] = {instance: [] for instance in wanted}
    counts: Counter = Counter()
    instance_counts: Dict[str, Counter] = {instance: Counter() for instance in wanted}
    for result in _results_of(history, config):
        if result.spec.instance not in by_instance:
            continue
        counts[result.outcome] += 1
        instance_counts[result.spec.instance][result.outcome] += 1
        if result.outcome != Outcome.HARNESS_ERROR:
            by_instance[result.spec.instance].append(result)

    uncovered = [instance for instance, runs in by_instance.items() if not runs]
    if uncovered:
        raise ObjectiveError(f"no runs of {config.config_id} on: {', '.join(uncovered)}")

    pooled = [r for runs in by_instance.values() for r in runs]
    return ScoreReport(
        config_id=config.config_id,
        per_instance={instance: par_score(runs, spec) for instance, runs in by_instance.items()},
        overall=par_score(pooled, spec),
        counts=dict(counts),
        instance_counts={instance: dict(c) for instance, c in instance_counts.items()},
    )


def relative_improvement(default_score: float, configured_score: float) -> float:
    """Percent improvement of `configured_score` over `default_score` (negative when worse)."""
    if not default_score > 0:
        raise ObjectiveError(f"default score must be positive, got {default_score}")
    return 100.0 * (default_score - configured_score) / default_score


def ecdf(times: Sequence[float]) -> List[Tuple[float, float]]:
    """
    Empirical CDF as step points (time, fraction of runs finishing by that time).

    Ties are merged into one point; the last probability is exactly 1.
    """
    if len(times) == 0:
        raise ObjectiveError("cannot build an ECDF from no runs")
    values = np.asarray(times, dtype=float)
    if np.any(values < 0):
        raise ObjectiveError("run times must not be negative")
    unique, counts = np.unique(values, return_counts=True)
    cumulative = np.cumsum(counts)
    n = len(values)
    return [(float(t), int(c) / n) for t, c in zip(unique, cumulative)]
