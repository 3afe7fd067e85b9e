"""
Campaigns: several independent configurator runs from one master seed.

Run i gets the seed derived from (master seed, i), so a campaign replays
exactly. The best-training incumbent is the reported result; validating
all incumbents and picking the best one is also offered, but that choice
is optimistically biased and labelled as such.

Example usage:
    campaign = CampaignSpec(scenario, n_runs=25, master_seed=1, budget=2000)
    result = run_campaign(campaign, out_dir="out/campaign")
    print(result.best_training.incumbent.canonical)
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from src.configurators.search import CONFIGURATORS, ConfiguratorResult
from src.objective import ObjectiveSpec
from src.paramspace import ParameterSpace, default_config, save_configuration
from src.reporting.validation import (
    DEFAULT_VALIDATION_RUNS,
    ValidationTable,
    best_by_validation,
    validate_configurations,
)
from src.runner import RunLog
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of configurator run `index` (0-based) under `master_seed`."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


@dataclass(frozen=True)
class CampaignSpec:
    """A batch of independent configurator runs on one scenario."""

    scenario: ScenarioSpec
    n_runs: int = 25
    master_seed: int = 0
    validation_runs: int = DEFAULT_VALIDATION_RUNS
    load_levels: Tuple[int, ...] = ()
    method: str = "smbo"
    budget: Optional[int] = None
    parallel_runs: int = 1
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be at least 1, got {self.n_runs}")
        if self.validation_runs < 1:
            raise ValueError(f"validation_runs must be at least 1, got {self.validation_runs}")
        if self.parallel_runs < 1:
            raise ValueError(f"parallel_runs must be at least 1, got {self.parallel_runs}")
        if self.method not in CONFIGURATORS:
            raise ValueError(f"unknown configurator '{self.method}' (choose from {', '.join(CONFIGURATORS)})")
        if any(level < 1 for level in self.load_levels):
            raise ValueError("load levels must be at least 1")
        if not self.load_levels:
            object.__setattr__(self, "load_levels", (self.scenario.concurrency_limit,))

    @property
    def seeds(self) -> List[int]:
        return [derive_seed(self.master_seed, i) for i in range(self.n_runs)]


@dataclass
class CampaignResult:
    """Per-run results (None for failed runs) and the best-training selection."""

    spec: CampaignSpec
    results: List[Optional[ConfiguratorResult]]
    failures: Dict[int, str] = field(default_factory=dict)

    def __iter__(self) -> Iterator[ConfiguratorResult]:
        return iter([r for r in self.results if r is not None])

    def __len__(self) -> int:
        return sum(1 for r in self.results if r is not None)

    @property
    def best_training_index(self) -> Optional[int]:
        """Run with the lowest training PAR-k (ties: lowest index)."""
        finished = [(r.training_score, i) for i, r in enumerate(self.results) if r is not None]
        return min(finished)[1] if finished else None

    @property
    def best_training(self) -> Optional[ConfiguratorResult]:
        index = self.best_training_index
        return None if index is None else self.results[index]

    def summary(self) -> Dict[str, Any]:
        best = self.best_training_index
        runs = []
        for i, (seed, result) in enumerate(zip(self.spec.seeds, self.results)):
            entry: Dict[str, Any] = {"index": i, "seed": seed, "best_training": i == best}
            if result is None:
                entry["error"] = self.failures.get(i)
            else:
                entry.update(result.summary())
            runs.append(entry)
        return {
            "method": self.spec.method,
            "master_seed": self.spec.master_seed,
            "n_runs": self.spec.n_runs,
            "best_training_index": best,
            "runs": runs,
        }


def run_directory(out_dir: Union[str, Path], index: int) -> Path:
    return Path(out_dir) / f"run-{index:02d}"


def write_result(result: ConfiguratorResult, directory: Union[str, Path]) -> Dict[str, Path]:
    """Persist trajectory, incumbent and summary of one configurator run."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": result.history.write_trajectory(target / "trajectory.csv"),
        "incumbent": save_configuration(result.incumbent, target / "incumbent.cfg"),
        "summary": target / "summary.json",
    }
    paths["summary"].write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def _run_one(campaign: CampaignSpec, space: ParameterSpace, spec: ObjectiveSpec, index: int, seed: int,
             out_dir: Optional[Path]) -> ConfiguratorResult:
    configure = CONFIGURATORS[campaign.method]
    log = RunLog(run_directory(out_dir, index) / "runs.jsonl", fresh=True) if out_dir else None
    logger.info("campaign run %d/%d (seed %d) started", index + 1, campaign.n_runs, seed)
    result = configure(campaign.scenario, space, spec, campaign.budget, seed, log, **campaign.options)
    if out_dir:
        write_result(result, run_directory(out_dir, index))
    logger.info("campaign run %d/%d finished: PAR %.4f", index + 1, campaign.n_runs, result.training_score)
    return result


def run_campaign(campaign: CampaignSpec, out_dir: Union[str, Path, None] = None) -> CampaignResult:
    """
    Run `campaign.n_runs` independent configurator runs.

    A run that fails is recorded and skipped; the campaign continues.
    Runs execute sequentially unless `parallel_runs` > 1.
    """
    space = campaign.scenario.load_space()
    spec = ObjectiveSpec.from_scenario(campaign.scenario)
    out = Path(out_dir) if out_dir is not None else None
    seeds = campaign.seeds
    results: List[Optional[ConfiguratorResult]] = [None] * campaign.n_runs
    failures: Dict[int, str] = {}

    def attempt(index: int):
        try:
            results[index] = _run_one(campaign, space, spec, index, seeds[index], out)
        except Exception as e:  # pylint: disable=broad-except
            logger.error("campaign run %d failed: %s", index + 1, e)
            failures[index] = f"{type(e).__name__}: {e}"

    if campaign.parallel_runs > 1:
        with ThreadPoolExecutor(max_workers=campaign.parallel_runs) as pool:
            list(pool.map(attempt, range(campaign.n_runs)))
    else:
        for index in range(campaign.n_runs):
            attempt(index)

    outcome = CampaignResult(campaign, results, failures)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "campaign.json").write_text(json.dumps(outcome.summary(), indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    return outcome


@dataclass
class CampaignValidation:
    """Validation tables per load level plus both final selections."""

    tables: Dict[int, ValidationTable]
    best_training_id: str
    best_validation_id: Dict[int, Optional[str]]

    def summary(self) -> Dict[str, Any]:
        return {
            "best_training": self.best_training_id,
            "best_validation_optimistic": {str(k): v for k, v in self.best_validation_id.items()},
        }


def validate_campaign(
    campaign: CampaignSpec,
    outcome: CampaignResult,
    log_dir: Union[str, Path, None] = None,
) -> CampaignValidation:
    """
    Validate the default and every incumbent at each of the campaign's load levels.

    The best-training incumbent is the unbiased final answer; the
    best-validation pick is reported alongside for comparison.
    """
    if outcome.best_training is None:
        raise ValueError("no configurator run finished; nothing to validate")
    space = campaign.scenario.load_space()
    configs = [default_config(space)] + [r.incumbent for r in outcome]
    tables = {}
    for level in campaign.load_levels:
        log = RunLog(Path(log_dir) / f"validation-L{level}.jsonl", fresh=True) if log_dir else None
        tables[level] = validate_configurations(
            campaign.scenario, configs, campaign.validation_runs, level,
            space=space, seed=campaign.master_seed, log=log,
        )
    best_validation = {}
    for level, table in tables.items():
        row = best_by_validation(table)
        best_validation[level] = row.config_id if row else None
    return CampaignValidation(tables, outcome.best_training.incumbent.config_id, best_validation)
