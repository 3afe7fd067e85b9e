"""
Empirical performance model: a random forest over encoded configurations.

Labels are per-run PAR-k contributions in log10 seconds; prediction
statistics come from the spread of the individual trees.

Example usage:
    model = fit_model(history, ObjectiveSpec(cutoff=60))
    mean, variance = predict(model, config)
    ei = expected_improvement(mean, variance, incumbent_score)
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm
from sklearn.ensemble import RandomForestRegressor

from src.objective import ObjectiveSpec
from src.paramspace import Configuration, ParameterSpace, SpaceMismatchError

logger = logging.getLogger(__name__)

# runtimes below this are indistinguishable from process start-up noise
LABEL_FLOOR = 0.005


class InsufficientHistoryError(ValueError):
    """Not enough distinct configurations to fit a model."""


@dataclass(frozen=True)
class ModelSettings:
    """Random forest knobs."""

    n_trees: int = 40
    min_samples_leaf: int = 3
    max_features: float = 5 / 6
    bootstrap: bool = True
    seed: int = 0


# ============================================================================
# FEATURE ENCODING
# ============================================================================

def feature_names(space: ParameterSpace) -> List[str]:
    """One slot per parameter, then one activity slot per conditional parameter."""
    names = list(space.names)
    names.extend(f"{p.name}:active" for p in space.parameters if space.condition_for(p.name) is not None)
    return names


def encode_features(space: ParameterSpace, config: Configuration) -> np.ndarray:
    """
    Fixed-length numeric vector for a configuration.

    Categorical and Boolean values map to their category index, numeric
    values to [0, 1] over their domain (log space when log-scaled). Inactive
    parameters take their default's encoding with the activity slot at 0.
    """
    if config.space_fingerprint != space.fingerprint:
        raise SpaceMismatchError("configuration belongs to a different space")
    slots = []
    activity = []
    for param in space.parameters:
        active = param.name in config
        value = config[param.name] if active else param.default
        slots.append(param.normalize(value))
        if space.condition_for(param.name) is not None:
            activity.append(1.0 if active else 0.0)
    return np.asarray(slots + activity, dtype=float)


def encode_many(space: ParameterSpace, configs: Sequence[Configuration]) -> np.ndarray:
    if not configs:
        return np.empty((0, len(feature_names(space))))
    return np.vstack([encode_features(space, c) for c in configs])


# ============================================================================
# MODEL
# ============================================================================

class PerformanceModel:
    """Fitted random forest plus the space it encodes."""

    def __init__(
        self,
        space: ParameterSpace,
        forest: RandomForestRegressor,
        fingerprint: str,
        n_samples: int,
        best_label: float,
    ):
        self.space = space
        self.forest = forest
        self.fingerprint = fingerprint
        self.n_samples = n_samples
        # lowest training label, log10 seconds
        self.best_label = best_label

    @property
    def n_trees(self) -> int:
        return len(self.forest.estimators_)

    def tree_predictions(self, configs: Sequence[Configuration]) -> np.ndarray:
        """Per-tree predictions in log10 seconds, shape (n_trees, n_configs)."""
        features = encode_many(self.space, configs)
        return np.stack([tree.predict(features) for tree in self.forest.estimators_], axis=0)

    def predict_log(self, configs: Sequence[Configuration]) -> Tuple[np.ndarray, np.ndarray]:
        """Across-tree mean and variance in log10 seconds."""
        preds = self.tree_predictions(configs)
        return preds.mean(axis=0), preds.var(axis=0)


def _training_fingerprint(configs: Sequence[Configuration], labels: Sequence[float]) -> str:
    digest = hashlib.sha1()
    for config, label in zip(configs, labels):
        digest.update(f"{config.canonical}\t{label!r}\n".encode("utf-8"))
    return digest.hexdigest()[:16]


def fit_model(
    history,
    spec: Optional[ObjectiveSpec] = None,
    settings: ModelSettings = ModelSettings(),
) -> PerformanceModel:
    """
    Train the forest on every recorded run.

    Each run contributes one (features, log10 PAR-k contribution) pair;
    TIMEOUT and CRASH runs enter at k x cutoff.

    Args:
        history: RunHistory to learn from
        spec: Objective for labels (defaults to the history's own)
        settings: Forest knobs; the seed makes fitting deterministic

    Raises:
        InsufficientHistoryError: fewer than two distinct configurations have runs
    """
    spec = spec or history.spec
    results = list(history)
    if len({r.config for r in results}) < 2:
        raise InsufficientHistoryError("at least two distinct configurations need runs before fitting")

    configs = [r.config for r in results]
    labels = [math.log10(max(spec.contribution(r), LABEL_FLOOR)) for r in results]
    forest = RandomForestRegressor(
        n_estimators=settings.n_trees,
        min_samples_leaf=settings.min_samples_leaf,
        max_features=settings.max_features,
        bootstrap=settings.bootstrap,
        random_state=settings.seed,
    )
    forest.fit(encode_many(history.space, configs), np.asarray(labels))
    logger.debug("fitted %d trees on %d runs", settings.n_trees, len(labels))
    return PerformanceModel(history.space, forest, _training_fingerprint(configs, labels), len(labels), min(labels))


def predict(model: PerformanceModel, config: Configuration) -> Tuple[float, float]:
    """
    Predicted runtime of one configuration.

    Returns:
        (mean, variance) in seconds; the mean averages the trees in log space
        and the variance is the across-tree variance of the tree predictions
    """
    if config.space_fingerprint != model.space.fingerprint:
        raise SpaceMismatchError("configuration does not belong to the model's space")
    preds = model.tree_predictions([config])[:, 0]
    seconds = np.power(10.0, preds)
    return float(10.0 ** preds.mean()), float(seconds.var())


# ============================================================================
# ACQUISITION
# ============================================================================

def expected_improvement(mean: float, variance: float, incumbent: float) -> float:
    """
    Expected improvement of a Gaussian prediction over the incumbent score (minimization).

    Raises:
        ValueError: negative variance
    """
    if variance < 0:
        raise ValueError(f"variance must not be negative, got {variance}")
    sigma = math.sqrt(variance)
    improvement = incumbent - mean
    if sigma == 0.0:
        return max(improvement, 0.0)
    z = improvement / sigma
    return max(improvement * norm.cdf(z) + sigma * norm.pdf(z), 0.0)


def expected_improvement_many(means: np.ndarray, variances: np.ndarray, incumbent: float) -> np.ndarray:
    """Vectorized `expected_improvement`."""
    if np.any(variances < 0):
        raise ValueError("variance must not be negative")
    sigma = np.sqrt(variances)
    improvement = incumbent - means
    ei = np.maximum(improvement, 0.0)
    spread = sigma > 0
    z = improvement[spread] / sigma[spread]
    ei[spread] = improvement[spread] * norm.cdf(z) + sigma[spread] * norm.pdf(z)
    return np.maximum(ei, 0.0)
