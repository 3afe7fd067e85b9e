"""
Validation of configurations against the default with independent runs.

Every configuration is run on the same (instance, seed) pairs at one load
level (concurrency limit); tables never mix load levels.

Example usage:
    table = validate_configurations(scenario, [default, incumbent], runs_per_instance=100, load_level=8)
    for entry in rank_by_validation(table, top=10):
        print(entry.rank, entry.config_id, entry.score)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import pandas as pd

from src.configurators.intensify import SeedLadder
from src.objective import (
    ObjectiveError,
    ObjectiveSpec,
    ScoreReport,
    aggregate_score,
    relative_improvement,
)
from src.paramspace import Configuration, ParameterSpace, SpaceMismatchError, default_config
from src.runner import HarnessError, Outcome, RunLog, RunResult, RunSpec, run_batch
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)

DEFAULT_VALIDATION_RUNS = 100


class LoadTagError(ValueError):
    """Results from different load levels were mixed in one table."""


def improvement_over(default_score: float, score: float) -> Optional[float]:
    """Relative improvement in percent, or None when the default scored zero."""
    if default_score <= 0:
        return None
    return relative_improvement(default_score, score)


@dataclass(frozen=True)
class ValidationRow:
    config_id: str
    canonical: str
    report: ScoreReport
    improvement: Optional[float]
    is_default: bool = False

    @property
    def overall(self) -> float:
        return self.report.overall

    @property
    def per_instance(self) -> Dict[str, float]:
        return self.report.per_instance

    @property
    def harness_errors(self) -> int:
        return self.report.counts.get(Outcome.HARNESS_ERROR, 0)


@dataclass
class ValidationTable:
    """PAR-k rows for a set of configurations at one load level; the default row is first."""

    rows: List[ValidationRow]
    load_tag: int
    instances: List[str]
    runs_per_instance: int
    results: Dict[str, List[RunResult]] = field(default_factory=dict)

    @property
    def default_row(self) -> ValidationRow:
        return next(row for row in self.rows if row.is_default)

    def row(self, config_id: str) -> ValidationRow:
        for row in self.rows:
            if row.config_id == config_id:
                return row
        raise KeyError(config_id)

    def to_frame(self) -> pd.DataFrame:
        """Long format: one line per (configuration, instance) plus an `ALL` line per configuration."""
        records = []
        for row in self.rows:
            default_scores = self.default_row.per_instance
            for instance, score in row.per_instance.items():
                records.append({
                    "config_id": row.config_id,
                    "instance": instance,
                    "par_k": score,
                    "rel_impr_pct": improvement_over(default_scores[instance], score),
                    "harness_errors": row.report.instance_counts.get(instance, {}).get(Outcome.HARNESS_ERROR, 0),
                    "load_tag": self.load_tag,
                })
            records.append({
                "config_id": row.config_id,
                "instance": "ALL",
                "par_k": row.overall,
                "rel_impr_pct": row.improvement,
                "harness_errors": row.harness_errors,
                "load_tag": self.load_tag,
            })
        return pd.DataFrame(records)


class RankEntry(NamedTuple):
    rank: int
    config_id: str
    score: float
    default_score: float


def build_validation_table(
    results: Sequence[RunResult],
    default: Configuration,
    spec: ObjectiveSpec,
    instances: Sequence[str],
    runs_per_instance: int,
    configs: Optional[Sequence[Configuration]] = None,
) -> ValidationTable:
    """
    Aggregate validation runs into a table (also used to rebuild tables from a run log).

    Raises:
        LoadTagError: the results carry more than one load tag
        ValueError: the default configuration has no runs
        HarnessError: a configuration has no scorable run on some instance
    """
    tags = sorted({r.load_tag for r in results})
    if len(tags) > 1:
        raise LoadTagError(f"results mix load levels {tags}")
    order = list(configs) if configs is not None else list(dict.fromkeys(r.config for r in results))
    if default not in order:
        raise ValueError("validation requires the default configuration")
    order = [default] + [c for c in order if c != default]

    grouped: Dict[Configuration, List[RunResult]] = {c: [] for c in order}
    for result in results:
        if result.config in grouped:
            grouped[result.config].append(result)

    reports = {}
    for config in order:
        try:
            reports[config] = aggregate_score(grouped[config], config, instances, spec)
        except ObjectiveError as e:
            raise HarnessError(f"no scorable validation runs: {e}") from e
    default_score = reports[default].overall
    rows = [
        ValidationRow(
            config_id=config.config_id,
            canonical=config.canonical,
            report=reports[config],
            improvement=0.0 if config == default else improvement_over(default_score, reports[config].overall),
            is_default=config == default,
        )
        for config in order
    ]
    return ValidationTable(
        rows=rows,
        load_tag=tags[0] if tags else 1,
        instances=list(instances),
        runs_per_instance=runs_per_instance,
        results={config.config_id: grouped[config] for config in order},
    )


def validate_configurations(
    scenario: ScenarioSpec,
    configs: Sequence[Configuration],
    runs_per_instance: int = DEFAULT_VALIDATION_RUNS,
    load_level: Optional[int] = None,
    spec: Optional[ObjectiveSpec] = None,
    space: Optional[ParameterSpace] = None,
    seed: int = 0,
    log: Optional[RunLog] = None,
) -> ValidationTable:
    """
    Run every configuration `runs_per_instance` times per instance and tabulate PAR-k.

    Args:
        scenario: Target and instances
        configs: Configurations to validate; must include the default
        runs_per_instance: Runs per (configuration, instance)
        load_level: Concurrency limit for the runs (defaults to the scenario's)
        spec: Objective (defaults to the scenario's)
        space: Space of the configurations (defaults to the scenario's)
        seed: Seed of the shared (instance, seed) pairs
        log: Optional run log

    Raises:
        ValueError: the default is missing or runs_per_instance < 1
        HarnessError: every run of some cell failed to start
    """
    if runs_per_instance < 1:
        raise ValueError(f"runs_per_instance must be at least 1, got {runs_per_instance}")
    space = space or scenario.load_space()
    spec = spec or ObjectiveSpec.from_scenario(scenario)
    default = default_config(space)
    unique = list(dict.fromkeys(configs))
    if any(c.space_fingerprint != space.fingerprint for c in unique):
        raise SpaceMismatchError("a configuration does not belong to the scenario's space")
    if default not in unique:
        raise ValueError("validation requires the default configuration")

    loaded = scenario.with_concurrency(load_level) if load_level else scenario
    pairs = SeedLadder(scenario.instances, seed).take(len(scenario.instances) * runs_per_instance)
    specs = [RunSpec(config, instance, run_seed) for config in unique for instance, run_seed in pairs]
    logger.info("validating %d configurations with %d runs each at load %d",
                len(unique), len(pairs), loaded.concurrency_limit)
    results = run_batch(loaded, specs, log=log)
    failed = sum(1 for r in results if r.outcome == Outcome.HARNESS_ERROR)
    if failed:
        logger.warning("%d validation runs could not be started and are excluded", failed)
    return build_validation_table(results, default, spec, scenario.instances, runs_per_instance, unique)


def rank_by_validation(table: ValidationTable, top: int = 10) -> List[RankEntry]:
    """
    Non-default configurations by ascending PAR-k, ties by ascending id.

    Each entry carries the default's score for comparison.
    """
    if not table.rows:
        raise ValueError("cannot rank an empty table")
    default_score = table.default_row.overall
    candidates = sorted((row for row in table.rows if not row.is_default),
                        key=lambda row: (row.overall, row.config_id))
    return [
        RankEntry(rank, row.config_id, row.overall, default_score)
        for rank, row in enumerate(candidates[:top], start=1)
    ]


def best_by_validation(table: ValidationTable) -> Optional[ValidationRow]:
    """Lowest-PAR non-default row. Selecting on validation scores is optimistically biased."""
    ranking = rank_by_validation(table, top=1)
    return table.row(ranking[0].config_id) if ranking else None


def compare_load_levels(tables: Sequence[ValidationTable]) -> pd.DataFrame:
    """
    Default and best configuration per load level, one row per table.

    Raises:
        LoadTagError: two tables share a load level
    """
    tags = [t.load_tag for t in tables]
    if len(set(tags)) != len(tags):
        raise LoadTagError(f"load levels repeat: {tags}")
    records = []
    for table in sorted(tables, key=lambda t: t.load_tag):
        best = best_by_validation(table)
        records.append({
            "load_tag": table.load_tag,
            "default_par_k": table.default_row.overall,
            "best_config_id": best.config_id if best else None,
            "best_par_k": best.overall if best else None,
            "rel_impr_pct": best.improvement if best else None,
        })
    return pd.DataFrame(records)
