"""
Configurators: random search and sequential model-based optimization.

Both share one loop: evaluate the default on the initial (instance, seed)
pairs, then race proposed challengers against the incumbent until the run
or wall-clock budget is spent. They differ only in how challengers are
proposed.

Example usage:
    result = smbo_configure(scenario, space, spec, budget=300, seed=1)
    result.incumbent, result.training_score
    result.history.write_trajectory("out/trajectory.csv")
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional

import numpy as np

from src.configurators.history import RunHistory, TrajectoryEntry
from src.configurators.intensify import (
    DEFAULT_MAX_INCUMBENT_RUNS,
    BudgetExhaustedError,
    RunBudget,
    SeedLadder,
    evaluate,
    grow_incumbent,
    intensify,
)
from src.configurators.model import (
    LABEL_FLOOR,
    InsufficientHistoryError,
    ModelSettings,
    PerformanceModel,
    expected_improvement_many,
    fit_model,
)
from src.objective import ObjectiveSpec
from src.paramspace import (
    Configuration,
    ParameterSpace,
    default_config,
    neighbours,
    sample_configurations,
    sample_random,
)
from src.runner import RunLog
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)

_SEED_HIGH = 2**31 - 1

# consecutive proposals that were all raced before; the space is exhausted
MAX_STALE_PROPOSALS = 1_000


@dataclass
class ConfiguratorResult:
    """Outcome of one configurator run."""

    method: str
    seed: int
    incumbent: Configuration
    training_score: float
    history: RunHistory
    pairs: List = field(default_factory=list)
    runs_used: int = 0

    @property
    def trajectory(self) -> List[TrajectoryEntry]:
        return self.history.trajectory

    @property
    def elapsed_seconds(self) -> float:
        return self.history.elapsed

    def summary(self) -> Dict[str, object]:
        """JSON-serializable overview."""
        first = self.history.first_improvement()
        return {
            "method": self.method,
            "seed": self.seed,
            "incumbent": self.incumbent.canonical,
            "incumbent_id": self.incumbent.config_id,
            "training_par_k": self.training_score,
            "runs_used": self.runs_used,
            "elapsed_seconds": self.elapsed_seconds,
            "incumbent_changes": len(self.trajectory) - 1,
            "first_improvement_runs": first.n_runs if first else None,
        }


# ============================================================================
# CHALLENGER SELECTION
# ============================================================================

def _acquisition(model: PerformanceModel, configs: List[Configuration], f_star: float) -> np.ndarray:
    mean, variance = model.predict_log(configs)
    return expected_improvement_many(mean, variance, f_star)


def _local_search(
    model: PerformanceModel,
    space: ParameterSpace,
    start: Configuration,
    value: float,
    f_star: float,
    rng: np.random.Generator,
    max_steps: int,
):
    """Hill-climb on EI through single-parameter moves until no neighbour is better."""
    current, current_value = start, value
    for _ in range(max_steps):
        candidates = neighbours(space, current, rng)
        if not candidates:
            break
        values = _acquisition(model, candidates, f_star)
        best = min(range(len(candidates)), key=lambda i: (-values[i], candidates[i].canonical))
        if not values[best] > current_value:
            break
        current, current_value = candidates[best], float(values[best])
    return current, current_value


def select_challengers(
    model: PerformanceModel,
    space: ParameterSpace,
    count: int,
    seed=None,
    incumbent_score: Optional[float] = None,
    exclude: Iterable[Configuration] = (),
    n_random_starts: int = 10_000,
    n_local_starts: int = 10,
    max_local_steps: int = 50,
) -> List[Configuration]:
    """
    Propose `count` challengers, alternating EI-maximizing and uniformly random picks.

    EI is computed in log10 space against the incumbent's score. The EI picks
    come from local search started at the best of `n_random_starts` random
    configurations; ties are broken by canonical order.

    Args:
        model: Fitted performance model
        space: Space to sample from
        count: Number of challengers (EI, random, EI, random, ...)
        seed: Seed or Generator; the same seed gives the same list
        incumbent_score: Incumbent PAR-k in seconds (defaults to the best training label)
        exclude: Configurations not to propose as EI picks (already raced)
        n_random_starts: Random configurations scored before local search
        n_local_starts: Best random configurations used as local search starts
        max_local_steps: Hill-climbing steps per local search
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if incumbent_score is None:
        f_star = model.best_label
    else:
        f_star = math.log10(max(incumbent_score, LABEL_FLOOR))
    excluded = set(exclude)

    starts = list(dict.fromkeys(sample_configurations(space, n_random_starts, rng)))
    scored: Dict[Configuration, float] = dict(zip(starts, (float(v) for v in _acquisition(model, starts, f_star))))
    ranked = sorted(scored.items(), key=lambda item: (-item[1], item[0].canonical))
    for start, value in ranked[:n_local_starts]:
        best, best_value = _local_search(model, space, start, value, f_star, rng, max_local_steps)
        scored[best] = best_value
    ranked = sorted(scored.items(), key=lambda item: (-item[1], item[0].canonical))

    n_ei = (count + 1) // 2
    ei_picks = [config for config, _ in ranked if config not in excluded][:n_ei]
    while len(ei_picks) < n_ei:
        ei_picks.append(sample_random(space, rng))
    random_picks = [sample_random(space, rng) for _ in range(count // 2)]

    challengers: List[Configuration] = []
    for i in range(n_ei):
        challengers.append(ei_picks[i])
        if i < len(random_picks):
            challengers.append(random_picks[i])
    return challengers


# ============================================================================
# CONFIGURATORS
# ============================================================================

class Configurator(ABC):
    """
    Shared configuration loop.

    Subclasses implement `propose`, returning the next challengers to race.
    The incumbent gains one pair per race until it holds `max_incumbent_runs`.
    """

    method = "configurator"

    def __init__(
        self,
        scenario: ScenarioSpec,
        space: Optional[ParameterSpace] = None,
        spec: Optional[ObjectiveSpec] = None,
        budget: Optional[int] = None,
        seed: int = 0,
        log: Optional[RunLog] = None,
        budget_wall_seconds: Optional[float] = None,
        max_incumbent_runs: int = DEFAULT_MAX_INCUMBENT_RUNS,
    ):
        self.scenario = scenario
        self.space = space or scenario.load_space()
        self.spec = spec or ObjectiveSpec.from_scenario(scenario)
        self.budget_runs = budget if budget is not None else scenario.budget_runs
        self.budget_wall_seconds = (
            budget_wall_seconds if budget_wall_seconds is not None else scenario.budget_wall_seconds
        )
        if self.budget_runs is None and self.budget_wall_seconds is None:
            raise ValueError("a run-count or wall-clock budget is required")
        if max_incumbent_runs < 1:
            raise ValueError(f"max_incumbent_runs must be at least 1, got {max_incumbent_runs}")
        self.seed = seed
        self.log = log
        self.max_incumbent_runs = max_incumbent_runs

    @abstractmethod
    def propose(
        self,
        history: RunHistory,
        incumbent: Configuration,
        incumbent_score: float,
        rng: np.random.Generator,
    ) -> List[Configuration]:
        """Next challengers to race against the incumbent."""

    def run(self) -> ConfiguratorResult:
        """
        Evaluate the default, then race challengers until the budget is spent.

        Raises:
            BudgetExhaustedError: the budget cannot pay for a single default run
            HarnessError: a target run could not be started
        """
        ladder_seed, search_seed = np.random.SeedSequence(self.seed).spawn(2)
        ladder = SeedLadder(self.scenario.instances, ladder_seed)
        rng = np.random.default_rng(search_seed)
        history = RunHistory(self.space, self.spec)
        budget = RunBudget(self.budget_runs, self.budget_wall_seconds)

        initial = self.scenario.default_initial_runs
        if budget.max_runs is not None:
            if budget.max_runs < 1:
                raise BudgetExhaustedError("budget exhausted before the default configuration was evaluated")
            initial = min(initial, budget.max_runs)
        pairs = ladder.take(initial)

        incumbent = default_config(self.space)
        evaluate(history, incumbent, pairs, self.scenario, budget, self.log)
        score = history.score(incumbent, pairs)
        history.record_incumbent(incumbent, score)
        logger.info("%s seed %d: default PAR %.4f on %d pairs", self.method, self.seed, score, len(pairs))

        stale = 0
        stopped = False
        while not stopped and not budget.exhausted and stale < MAX_STALE_PROPOSALS:
            for challenger in self.propose(history, incumbent, score, rng):
                if budget.exhausted:
                    break
                if history.has_runs(challenger):
                    stale += 1
                    continue
                stale = 0
                try:
                    pairs = grow_incumbent(history, incumbent, pairs, ladder, self.scenario,
                                           self.max_incumbent_runs, budget, self.log)
                    score = history.score(incumbent, pairs)
                    winner = intensify(history, incumbent, challenger, self.scenario,
                                       pairs=pairs, budget=budget, log=self.log)
                except BudgetExhaustedError:
                    stopped = True
                    break
                if winner != incumbent:
                    incumbent, score = winner, history.score(winner, pairs)
                    history.record_incumbent(incumbent, score)
        if stale >= MAX_STALE_PROPOSALS:
            logger.info("%s seed %d: no unexplored configurations proposed, stopping", self.method, self.seed)

        return ConfiguratorResult(
            method=self.method,
            seed=self.seed,
            incumbent=incumbent,
            training_score=score,
            history=history,
            pairs=pairs,
            runs_used=budget.used_runs,
        )


class RandomSearch(Configurator):
    """Challengers drawn uniformly from the space."""

    method = "random"

    def __init__(self, *args, batch_size: int = 10, **kwargs):
        super().__init__(*args, **kwargs)
        self.batch_size = batch_size

    def propose(self, history, incumbent, incumbent_score, rng):
        return sample_configurations(self.space, self.batch_size, rng)


class SMBOConfigurator(Configurator):
    """Challengers chosen by expected improvement under a random forest model."""

    method = "smbo"

    def __init__(
        self,
        *args,
        challengers_per_iteration: int = 10,
        model_settings: ModelSettings = ModelSettings(),
        n_random_starts: int = 10_000,
        n_local_starts: int = 10,
        **kwargs,
    ):
        super().__init__(*args, **kwargs)
        self.challengers_per_iteration = challengers_per_iteration
        self.model_settings = model_settings
        self.n_random_starts = n_random_starts
        self.n_local_starts = n_local_starts

    def propose(self, history, incumbent, incumbent_score, rng):
        try:
            model = fit_model(history, settings=replace(self.model_settings, seed=int(rng.integers(_SEED_HIGH))))
        except InsufficientHistoryError:
            return sample_configurations(self.space, self.challengers_per_iteration, rng)
        return select_challengers(
            model,
            self.space,
            self.challengers_per_iteration,
            seed=rng,
            incumbent_score=incumbent_score,
            exclude=history.configurations(),
            n_random_starts=self.n_random_starts,
            n_local_starts=self.n_local_starts,
        )


def random_search(
    scenario: ScenarioSpec,
    space: Optional[ParameterSpace] = None,
    spec: Optional[ObjectiveSpec] = None,
    budget: Optional[int] = None,
    seed: int = 0,
    log: Optional[RunLog] = None,
    **options,
) -> ConfiguratorResult:
    """Random search with the default as first candidate; `budget` counts target runs."""
    return RandomSearch(scenario, space, spec, budget, seed, log, **options).run()


def smbo_configure(
    scenario: ScenarioSpec,
    space: Optional[ParameterSpace] = None,
    spec: Optional[ObjectiveSpec] = None,
    budget: Optional[int] = None,
    seed: int = 0,
    log: Optional[RunLog] = None,
    **options,
) -> ConfiguratorResult:
    """
    Sequential model-based configuration.

    Loop: fit the forest on the history, select challengers by expected
    improvement interleaved with random ones, race each against the
    incumbent. `budget` counts target runs; the scenario's wall-clock budget
    applies as well.
    """
    return SMBOConfigurator(scenario, space, spec, budget, seed, log, **options).run()


CONFIGURATORS = {
    RandomSearch.method: random_search,
    SMBOConfigurator.method: smbo_configure,
}
