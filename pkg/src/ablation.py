"""
Ablation analysis: a greedy path from the default to an optimized configuration.

Each round evaluates every single-parameter move towards the target and
takes the one with the lowest PAR-k, attributing a portion of the total
improvement to that parameter.

Example usage:
    path = ablation_path(scenario, spec, default, target, runs_per_eval=10)
    for step in path.steps:
        print(step.round, step.parameter, step.old, step.new, step.portion)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.configurators.intensify import SeedLadder
from src.objective import ObjectiveSpec, par_score
from src.paramspace import (
    INACTIVE,
    ConfigChange,
    Configuration,
    ParameterSpace,
    SpaceMismatchError,
    config_diff,
    format_value,
    reassign,
)
from src.runner import HarnessError, RunLog, RunSpec, harness_errors, run_batch
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)

DEFAULT_RUNS_PER_EVAL = 10


class StuckAblationError(RuntimeError):
    """No valid single-parameter move remains although the target is not reached."""

    def __init__(self, message: str, path: Optional["AblationPath"] = None):
        super().__init__(message)
        self.path = path


def _value_text(value) -> str:
    return "inactive" if value is INACTIVE else format_value(value)


@dataclass(frozen=True)
class AblationStep:
    """One greedy move; `changes` lists every parameter the move touched."""

    round: int
    parameter: str
    old: object
    new: object
    score: float
    portion: float
    changes: Tuple[ConfigChange, ...] = ()

    def to_row(self) -> Dict[str, object]:
        return {
            "round": self.round,
            "parameter": self.parameter,
            "from": _value_text(self.old),
            "to": _value_text(self.new),
            "par_k": self.score,
            "portion": self.portion,
        }


@dataclass
class AblationPath:
    """Greedy path with its endpoint scores and every evaluation made along the way."""

    default_score: float
    target_score: float
    steps: List[AblationStep] = field(default_factory=list)
    instances: Tuple[str, ...] = ()
    runs_per_eval: int = DEFAULT_RUNS_PER_EVAL
    normalized: bool = True
    evaluations: List[Dict[str, object]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, object]]:
        return [step.to_row() for step in self.steps]

    def top(self, k: int) -> List[AblationStep]:
        """The k steps with the largest portions, in path order."""
        chosen = sorted(self.steps, key=lambda s: (-s.portion, s.round))[:k]
        return sorted(chosen, key=lambda s: s.round)


def _moves(space: ParameterSpace, current: Configuration, target: Configuration) -> List[Tuple[str, Configuration]]:
    moves = []
    for change in config_diff(current, target):
        if change.new is INACTIVE or change.old is INACTIVE:
            # follows from its parent's move
            continue
        candidate = reassign(space, current, {change.name: change.new}, fill=target)
        if candidate is None:
            logger.debug("move of %s to %s is forbidden", change.name, _value_text(change.new))
            continue
        moves.append((change.name, candidate))
    return moves


def ablation_candidates(space: ParameterSpace, current: Configuration, target: Configuration) -> List[Configuration]:
    """
    One candidate per parameter that still differs from the target.

    Each candidate sets that parameter to its target value; children it
    activates take their target values (or defaults when inactive in the
    target) in the same move. Candidates violating a forbidden clause are
    skipped, so an empty list means the path is stuck.

    Raises:
        ValueError: current equals target
        SpaceMismatchError: the configurations belong to different spaces
    """
    if current.space_fingerprint != space.fingerprint or target.space_fingerprint != space.fingerprint:
        raise SpaceMismatchError("configurations do not belong to the ablation space")
    if current == target:
        raise ValueError("current configuration already equals the target")
    return [candidate for _, candidate in _moves(space, current, target)]


class _Evaluator:
    """Scores configurations on a fixed pair set, running each configuration once."""

    def __init__(self, scenario: ScenarioSpec, spec: ObjectiveSpec, pairs, log: Optional[RunLog]):
        self.scenario = scenario
        self.spec = spec
        self.pairs = pairs
        self.log = log
        self.cache: Dict[Configuration, float] = {}

    def scores(self, configs: Sequence[Configuration]) -> List[float]:
        pending = [c for c in dict.fromkeys(configs) if c not in self.cache]
        if pending:
            specs = [RunSpec(config, instance, seed) for config in pending for instance, seed in self.pairs]
            results = run_batch(self.scenario, specs, log=self.log)
            failed = harness_errors(results)
            if failed:
                raise HarnessError(failed[0].error)
            width = len(self.pairs)
            for i, config in enumerate(pending):
                self.cache[config] = par_score(results[i * width:(i + 1) * width], self.spec)
        return [self.cache[c] for c in configs]


def ablation_path(
    scenario: ScenarioSpec,
    spec: ObjectiveSpec,
    default: Configuration,
    target: Configuration,
    instances: Optional[Sequence[str]] = None,
    runs_per_eval: int = DEFAULT_RUNS_PER_EVAL,
    seed: int = 0,
    space: Optional[ParameterSpace] = None,
    log: Optional[RunLog] = None,
) -> AblationPath:
    """
    Walk greedily from `default` to `target`.

    Every configuration is evaluated with `runs_per_eval` runs per instance
    on the same (instance, seed) pairs. Portions are 100 x (score before -
    score after) / (default score - target score); when the target is not
    better than the default they are relative to the default score instead
    and the path is marked as not normalized.

    Raises:
        ValueError: runs_per_eval < 1
        StuckAblationError: no valid move remains (the partial path is attached)
        HarnessError: a target run could not be started
    """
    if runs_per_eval < 1:
        raise ValueError(f"runs_per_eval must be at least 1, got {runs_per_eval}")
    space = space or scenario.load_space()
    chosen = tuple(instances) if instances else scenario.instances
    pairs = SeedLadder(chosen, seed).take(len(chosen) * runs_per_eval)
    evaluator = _Evaluator(scenario, spec, pairs, log)

    default_score, target_score = evaluator.scores([default, target])
    path = AblationPath(default_score, target_score, instances=chosen, runs_per_eval=runs_per_eval)
    if default == target:
        return path

    denominator = default_score - target_score
    if denominator <= 0:
        logger.warning("target (%.4f) is not better than the default (%.4f); portions are relative to the default",
                       target_score, default_score)
        path.normalized = False
        denominator = default_score

    current, current_score = default, default_score
    round_index = 0
    while current != target:
        round_index += 1
        moves = _moves(space, current, target)
        if not moves:
            raise StuckAblationError(
                f"no valid move towards the target after {round_index - 1} rounds", path)
        scores = evaluator.scores([candidate for _, candidate in moves])
        for (name, candidate), score in zip(moves, scores):
            path.evaluations.append({"round": round_index, "parameter": name,
                                     "config_id": candidate.config_id, "par_k": score})
        best = min(range(len(moves)), key=lambda i: (scores[i], moves[i][0]))
        name, candidate = moves[best]
        score = scores[best]
        path.steps.append(AblationStep(
            round=round_index,
            parameter=name,
            old=current.get(name, INACTIVE),
            new=candidate.get(name, INACTIVE),
            score=score,
            portion=100.0 * (current_score - score) / denominator,
            changes=tuple(config_diff(current, candidate)),
        ))
        logger.info("ablation round %d: %s (PAR %.4f)", round_index, name, score)
        current, current_score = candidate, score
    return path
