"""
Plot data files: runtime ECDFs, default-vs-configured scatter pairs and
incumbent trajectories, written as CSV for external plotting.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.configurators.history import TRAJECTORY_COLUMNS, RunHistory, TrajectoryEntry
from src.objective import ObjectiveSpec, ecdf
from src.runner import Outcome, RunResult

PLOT_KINDS = ("ecdf", "scatter", "trajectory")

_PROBABILITY_DIGITS = 4


def _scorable(results: Sequence[RunResult]) -> List[RunResult]:
    return [r for r in results if r.outcome != Outcome.HARNESS_ERROR]


def ecdf_frame(runs: Dict[str, Sequence[RunResult]], spec: ObjectiveSpec) -> pd.DataFrame:
    """Step points `config_id,time,probability` per configuration; TIMEOUT/CRASH count as k x cutoff."""
    records = []
    for config_id in sorted(runs):
        times = [spec.contribution(r) for r in _scorable(runs[config_id])]
        for time, probability in ecdf(times):
            records.append({"config_id": config_id, "time": time,
                            "probability": round(probability, _PROBABILITY_DIGITS)})
    return pd.DataFrame(records, columns=["config_id", "time", "probability"])


def scatter_frame(
    default_runs: Sequence[RunResult],
    configured_runs: Sequence[RunResult],
    spec: ObjectiveSpec,
) -> pd.DataFrame:
    """
    Per-run (default time, configured time) pairs matched by (instance, seed).

    Raises:
        ValueError: a run has no partner with the same (instance, seed)
    """
    default_by_pair = {r.pair: r for r in _scorable(default_runs)}
    configured_by_pair = {r.pair: r for r in _scorable(configured_runs)}
    unmatched = sorted(set(default_by_pair) ^ set(configured_by_pair))
    if unmatched:
        instance, seed = unmatched[0]
        raise ValueError(f"{len(unmatched)} runs have no partner, e.g. {instance} seed {seed}")
    records = [
        {
            "instance": instance,
            "seed": seed,
            "default_time": spec.contribution(default_by_pair[(instance, seed)]),
            "configured_time": spec.contribution(configured_by_pair[(instance, seed)]),
        }
        for instance, seed in sorted(default_by_pair)
    ]
    return pd.DataFrame(records, columns=["instance", "seed", "default_time", "configured_time"])


def trajectory_frame(trajectory: Union[RunHistory, Sequence[TrajectoryEntry]]) -> pd.DataFrame:
    entries = trajectory.trajectory if isinstance(trajectory, RunHistory) else trajectory
    return pd.DataFrame([e.to_dict() for e in entries], columns=TRAJECTORY_COLUMNS)


def emit_plot_data(
    data,
    kind: str,
    path: Union[str, Path],
    spec: Optional[ObjectiveSpec] = None,
) -> Path:
    """
    Write plot data of the given kind to a CSV file.

    Args:
        data: ecdf: {config_id: runs}; scatter: (default runs, configured runs);
              trajectory: RunHistory or trajectory entries
        kind: One of "ecdf", "scatter", "trajectory"
        path: Output file
        spec: Objective for run times (required for ecdf and scatter)

    Returns:
        Path of the written file
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind '{kind}' (choose from {', '.join(PLOT_KINDS)})")
    if kind != "trajectory" and spec is None:
        raise ValueError(f"{kind} plot data needs an objective")
    if kind == "ecdf":
        frame = ecdf_frame(data, spec)
    elif kind == "scatter":
        default_runs, configured_runs = data
        frame = scatter_frame(default_runs, configured_runs, spec)
    else:
        frame = trajectory_frame(data)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False)
    return target


def split_by_config(results: Sequence[RunResult]) -> Dict[str, List[RunResult]]:
    grouped: Dict[str, List[RunResult]] = {}
    for result in results:
        grouped.setdefault(result.config.config_id, []).append(result)
    return grouped


def pair_for_scatter(results: Sequence[RunResult], default_id: str, configured_id: str) -> Tuple[List, List]:
    grouped = split_by_config(results)
    missing = [cid for cid in (default_id, configured_id) if cid not in grouped]
    if missing:
        raise ValueError(f"no runs of {', '.join(missing)}")
    return grouped[default_id], grouped[configured_id]
