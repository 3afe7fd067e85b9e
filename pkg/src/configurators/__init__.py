"""
Configurators for target parameter spaces.

Components:
- RunHistory: append-only record of target runs and the incumbent trajectory
- PerformanceModel: random forest over encoded configurations
- intensify: racing of a challenger against the incumbent on matched pairs
- random_search / smbo_configure: the two configuration loops

Usage:
    from src.configurators import smbo_configure

    result = smbo_configure(scenario, budget=300, seed=1)
    print(result.incumbent.canonical, result.training_score)
"""

from src.configurators.history import (
    RunHistory,
    TrajectoryEntry,
    TRAJECTORY_COLUMNS,
)

from src.configurators.model import (
    InsufficientHistoryError,
    ModelSettings,
    PerformanceModel,
    encode_features,
    expected_improvement,
    fit_model,
    predict,
)

from src.configurators.intensify import (
    BudgetExhaustedError,
    RunBudget,
    SeedLadder,
    intensify,
)

from src.configurators.search import (
    CONFIGURATORS,
    ConfiguratorResult,
    RandomSearch,
    SMBOConfigurator,
    random_search,
    select_challengers,
    smbo_configure,
)

__all__ = [
    # History
    "RunHistory",
    "TrajectoryEntry",
    "TRAJECTORY_COLUMNS",

    # Model
    "InsufficientHistoryError",
    "ModelSettings",
    "PerformanceModel",
    "encode_features",
    "expected_improvement",
    "fit_model",
    "predict",

    # Racing
    "BudgetExhaustedError",
    "RunBudget",
    "SeedLadder",
    "intensify",

    # Search
    "CONFIGURATORS",
    "ConfiguratorResult",
    "RandomSearch",
    "SMBOConfigurator",
    "random_search",
    "select_challengers",
    "smbo_configure",
]
