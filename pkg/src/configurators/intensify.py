"""
Racing a challenger against the incumbent on matched (instance, seed) pairs.

Before each race the incumbent gains one more pair from the seed ladder, up
to a cap. The challenger runs on cumulative blocks of the incumbent's pairs
of size 1, 2, 4, ... and is dropped as soon as it is worse than the
incumbent on the pairs both have run. It replaces the incumbent only after covering the
incumbent's whole pair set with a strictly lower PAR-k.
"""

import logging
import time
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.objective import ObjectiveSpec
from src.paramspace import Configuration
from src.runner import HarnessError, RunLog, RunSpec, harness_errors, run_batch
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)

Pair = Tuple[str, int]

_SEED_HIGH = 2**31 - 1

DEFAULT_MAX_INCUMBENT_RUNS = 2_000


class BudgetExhaustedError(RuntimeError):
    """The configuration budget cannot pay for the requested runs."""


class SeedLadder:
    """
    Deterministic sequence of (instance, seed) pairs.

    Instances are visited round-robin in scenario order; every pair gets a
    fresh seed drawn from one generator, so every configuration raced against
    the same ladder sees identical pairs.
    """

    def __init__(self, instances: Sequence[str], seed: Union[int, np.random.SeedSequence]):
        self.instances = tuple(instances)
        self._rng = np.random.default_rng(seed)
        self._pairs: List[Pair] = []

    def take(self, n: int) -> List[Pair]:
        while len(self._pairs) < n:
            instance = self.instances[len(self._pairs) % len(self.instances)]
            self._pairs.append((instance, int(self._rng.integers(0, _SEED_HIGH))))
        return list(self._pairs[:n])


class RunBudget:
    """Run-count and wall-clock limits shared by one configurator run."""

    def __init__(self, max_runs: Optional[int] = None, max_wall_seconds: Optional[float] = None):
        self.max_runs = max_runs
        self.max_wall_seconds = max_wall_seconds
        self.used_runs = 0
        self._started = time.monotonic()

    @property
    def remaining_runs(self) -> Optional[int]:
        return None if self.max_runs is None else max(self.max_runs - self.used_runs, 0)

    @property
    def wall_elapsed(self) -> float:
        return time.monotonic() - self._started

    @property
    def exhausted(self) -> bool:
        if self.max_runs is not None and self.used_runs >= self.max_runs:
            return True
        return self.max_wall_seconds is not None and self.wall_elapsed >= self.max_wall_seconds

    def charge(self, n: int):
        """
        Reserve `n` runs.

        Raises:
            BudgetExhaustedError: not enough runs or time remain
        """
        if n == 0:
            return
        if self.exhausted or (self.remaining_runs is not None and n > self.remaining_runs):
            raise BudgetExhaustedError(f"budget cannot cover {n} more runs ({self.used_runs} used)")
        self.used_runs += n


def evaluate(
    history,
    config: Configuration,
    pairs: Sequence[Pair],
    scenario: ScenarioSpec,
    budget: Optional[RunBudget] = None,
    log: Optional[RunLog] = None,
) -> int:
    """
    Run `config` on every pair it has not been run on yet.

    Returns:
        Number of new runs

    Raises:
        BudgetExhaustedError: the budget cannot cover the missing runs
        HarnessError: a target run could not be started
    """
    missing = [pair for pair in pairs if history.result_on(config, pair) is None]
    if not missing:
        return 0
    if budget is not None:
        budget.charge(len(missing))
    results = run_batch(scenario, [RunSpec(config, instance, seed) for instance, seed in missing], log=log)
    failed = harness_errors(results)
    if failed:
        raise HarnessError(failed[0].error)
    history.extend(results)
    return len(missing)


def grow_incumbent(
    history,
    incumbent: Configuration,
    pairs: Sequence[Pair],
    ladder: SeedLadder,
    scenario: ScenarioSpec,
    max_runs: int,
    budget: Optional[RunBudget] = None,
    log: Optional[RunLog] = None,
) -> List[Pair]:
    """
    Run the incumbent on the next ladder pair, up to `max_runs` pairs.

    `pairs` must be a prefix of the ladder. Returns the incumbent's new pair
    set, unchanged once it holds `max_runs` pairs.

    Raises:
        BudgetExhaustedError: the budget cannot cover the extra run
        HarnessError: a target run could not be started
    """
    if len(pairs) >= max_runs:
        return list(pairs)
    grown = ladder.take(len(pairs) + 1)
    evaluate(history, incumbent, grown, scenario, budget, log)
    return grown


def intensify(
    history,
    incumbent: Configuration,
    challenger: Configuration,
    scenario: ScenarioSpec,
    spec: Optional[ObjectiveSpec] = None,
    pairs: Optional[Sequence[Pair]] = None,
    budget: Optional[RunBudget] = None,
    log: Optional[RunLog] = None,
) -> Configuration:
    """
    Race `challenger` against `incumbent` and return the winner.

    Args:
        history: RunHistory holding the incumbent's runs; new runs are appended
        incumbent: Current best configuration (must have runs)
        challenger: Candidate configuration
        scenario: Target to run
        spec: Objective (defaults to the history's own); scores come from history
        pairs: The incumbent's (instance, seed) set, defaults to all its pairs
        budget: Optional run budget charged for every challenger run
        log: Optional run log

    Returns:
        The challenger if promoted, otherwise the incumbent (ties keep the incumbent)

    Raises:
        ValueError: the incumbent has no runs
        BudgetExhaustedError: the budget ran out mid-race
        HarnessError: a target run could not be started
    """
    if spec is not None and spec != history.spec:
        raise ValueError("intensification objective differs from the history's objective")
    race = list(pairs) if pairs is not None else history.pairs_of(incumbent)
    if not race:
        raise ValueError(f"incumbent {incumbent.config_id} has no runs")
    if challenger == incumbent:
        return incumbent

    size = 1
    while True:
        shared = race[:size]
        evaluate(history, challenger, shared, scenario, budget, log)
        challenger_score = history.score(challenger, shared)
        incumbent_score = history.score(incumbent, shared)
        if challenger_score > incumbent_score:
            logger.debug("challenger %s rejected after %d pairs (%.4f > %.4f)",
                         challenger.config_id, size, challenger_score, incumbent_score)
            return incumbent
        if size == len(race):
            if challenger_score < incumbent_score:
                logger.debug("challenger %s promoted (%.4f < %.4f)",
                             challenger.config_id, challenger_score, incumbent_score)
                return challenger
            return incumbent
        size = min(size * 2, len(race))
