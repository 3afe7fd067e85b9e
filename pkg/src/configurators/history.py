"""
Run History - append-only record of every target run a configurator made.

Keeps the runs indexed by configuration and by (configuration, instance,
seed), tracks the budget consumed, and records the incumbent trajectory.

Example usage:
    history = RunHistory(space, ObjectiveSpec(cutoff=60))
    history.extend(run_batch(scenario, specs))

    # PAR-k of a configuration on a fixed set of (instance, seed) pairs
    score = history.score(config, pairs)

    # Incumbent changes
    history.record_incumbent(config, score)
    history.first_improvement()
"""

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.objective import ObjectiveError, ObjectiveSpec, par_score
from src.paramspace import Configuration, ParameterSpace, SpaceMismatchError
from src.runner import Outcome, RunLog, RunResult
from src.scenario import ObjectiveSource

logger = logging.getLogger(__name__)

Pair = Tuple[str, int]

TRAJECTORY_COLUMNS = ["elapsed_seconds", "config_id", "training_par_k", "n_runs"]


@dataclass(frozen=True)
class TrajectoryEntry:
    """One incumbent change."""

    elapsed_seconds: float
    config_id: str
    training_par_k: float
    n_runs: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "elapsed_seconds": self.elapsed_seconds,
            "config_id": self.config_id,
            "training_par_k": self.training_par_k,
            "n_runs": self.n_runs,
        }


class RunHistory:
    """
    Append-only, thread-safe store of RunResults.

    Supports:
    - Lookup by configuration and by (configuration, instance, seed)
    - Budget accounting (runs and objective seconds consumed)
    - Incumbent trajectory with strictly improving training scores
    """

    def __init__(self, space: ParameterSpace, spec: ObjectiveSpec):
        """
        Initialize RunHistory.

        Args:
            space: Space every recorded configuration belongs to
            spec: Objective used for scores and budget accounting
        """
        self.space = space
        self.spec = spec
        self._lock = threading.RLock()
        self._results: List[RunResult] = []
        self._by_config: Dict[Configuration, List[int]] = {}
        self._by_pair: Dict[Tuple[Configuration, Pair], int] = {}
        self._trajectory: List[TrajectoryEntry] = []
        self._elapsed = 0.0

    # Recording --------------------------------------------------------------

    def _cost(self, result: RunResult) -> float:
        """Objective seconds a run consumed from the configuration budget."""
        if result.outcome == Outcome.HARNESS_ERROR:
            return 0.0
        if result.outcome == Outcome.TIMEOUT:
            return self.spec.cutoff
        if self.spec.source == ObjectiveSource.REPORTED_METRIC:
            return result.reported or 0.0
        return result.measured

    def append(self, result: RunResult):
        """Record one run. Harness errors are ignored."""
        if result.config.space_fingerprint != self.space.fingerprint:
            raise SpaceMismatchError("run belongs to a different space")
        if result.outcome == Outcome.HARNESS_ERROR:
            return
        with self._lock:
            index = len(self._results)
            self._results.append(result)
            self._by_config.setdefault(result.config, []).append(index)
            self._by_pair.setdefault((result.config, result.pair), index)
            self._elapsed += self._cost(result)

    def extend(self, results: Sequence[RunResult]):
        for result in results:
            self.append(result)

    # Queries ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._results)

    def __iter__(self) -> Iterator[RunResult]:
        with self._lock:
            snapshot = list(self._results)
        return iter(snapshot)

    @property
    def n_runs(self) -> int:
        return len(self._results)

    @property
    def elapsed(self) -> float:
        return self._elapsed

    def configurations(self) -> List[Configuration]:
        """Distinct configurations in order of their first run."""
        with self._lock:
            return list(self._by_config)

    def results_for(self, config: Configuration) -> List[RunResult]:
        with self._lock:
            return [self._results[i] for i in self._by_config.get(config, [])]

    def result_on(self, config: Configuration, pair: Pair) -> Optional[RunResult]:
        """First run of `config` on an (instance, seed) pair, if any."""
        with self._lock:
            index = self._by_pair.get((config, pair))
            return None if index is None else self._results[index]

    def pairs_of(self, config: Configuration) -> List[Pair]:
        """Distinct (instance, seed) pairs `config` was run on, in run order."""
        return list(dict.fromkeys(r.pair for r in self.results_for(config)))

    def has_runs(self, config: Configuration) -> bool:
        return config in self._by_config

    def score(self, config: Configuration, pairs: Optional[Sequence[Pair]] = None) -> float:
        """
        PAR-k of `config`, over all its runs or restricted to the given pairs.

        Raises:
            ObjectiveError: `config` has no run on one of the pairs
        """
        if pairs is None:
            return par_score(self.results_for(config), self.spec)
        results = []
        for pair in pairs:
            result = self.result_on(config, pair)
            if result is None:
                raise ObjectiveError(f"{config.config_id} has no run on {pair[0]} seed {pair[1]}")
            results.append(result)
        return par_score(results, self.spec)

    # Trajectory -------------------------------------------------------------

    def record_incumbent(self, config: Configuration, training_score: float) -> TrajectoryEntry:
        """
        Append an incumbent change to the trajectory.

        Raises:
            ValueError: the score does not improve on the current incumbent
        """
        with self._lock:
            if self._trajectory and not training_score < self._trajectory[-1].training_par_k:
                raise ValueError(
                    f"incumbent score {training_score} does not improve on "
                    f"{self._trajectory[-1].training_par_k}"
                )
            entry = TrajectoryEntry(self._elapsed, config.config_id, training_score, len(self._results))
            self._trajectory.append(entry)
        logger.info("incumbent %s: PAR %.4f after %d runs (%.1fs)",
                    config.config_id, training_score, entry.n_runs, entry.elapsed_seconds)
        return entry

    @property
    def trajectory(self) -> List[TrajectoryEntry]:
        with self._lock:
            return list(self._trajectory)

    def first_improvement(self) -> Optional[TrajectoryEntry]:
        """First trajectory entry that beats the initial incumbent (None if nothing did)."""
        with self._lock:
            return self._trajectory[1] if len(self._trajectory) > 1 else None

    def trajectory_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.to_dict() for e in self.trajectory], columns=TRAJECTORY_COLUMNS)

    def write_trajectory(self, path: Union[str, Path]) -> Path:
        """Write `elapsed_seconds,config_id,training_par_k,n_runs` rows."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.trajectory_frame().to_csv(target, index=False)
        return target

    # Persistence ------------------------------------------------------------

    @classmethod
    def from_log(cls, log: Union[RunLog, str, Path], space: ParameterSpace, spec: ObjectiveSpec) -> "RunHistory":
        """Rebuild a history (without trajectory) from a run log."""
        run_log = log if isinstance(log, RunLog) else RunLog(log)
        history = cls(space, spec)
        history.extend(run_log.read(space))
        return history
