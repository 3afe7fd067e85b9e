"""
Command-level tool functions behind the command-line verbs.

Each function has:
- Plain, JSON-friendly parameters (file paths, counts, seeds)
- Structured return values (JSON-serializable)
- Error handling: failures come back as {"success": False, "error": ...,
  "error_kind": "usage" | "harness"} instead of raising

All artifacts are written under the given output directory with stable
file names.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from src.ablation import DEFAULT_RUNS_PER_EVAL, StuckAblationError, ablation_path
from src.objective import ObjectiveSpec
from src.paramspace import (
    default_config,
    load_configuration,
    load_space,
    sample_configurations,
    save_space,
    write_pcs,
)
from src.refine import (
    DEFAULT_SCAN_SIZE,
    MAX_FALSE_POSITIVE,
    MIN_SUPPORT,
    RefinementError,
    apply_refinements,
    crash_scan,
    propose_refinements,
    render_proposals,
)
from src.reporting.campaign import CampaignSpec, run_campaign, validate_campaign
from src.reporting.plot_data import emit_plot_data, pair_for_scatter, split_by_config
from src.reporting.tables import (
    format_ablation,
    format_load_comparison,
    format_ranking,
    format_validation_table,
    render_score_report,
)
from src.reporting.validation import (
    DEFAULT_VALIDATION_RUNS,
    ValidationTable,
    best_by_validation,
    build_validation_table,
    compare_load_levels,
    rank_by_validation,
    validate_configurations,
)
from src.runner import HarnessError, RunLog
from src.scenario import ScenarioSpec, load_scenario

logger = logging.getLogger(__name__)


def _error(e: Exception, **extra) -> Dict[str, Any]:
    """Failure dict; harness errors are reported separately from usage errors."""
    kind = "harness" if isinstance(e, HarnessError) else "usage"
    return {"success": False, "error": str(e), "error_kind": kind, **extra}


def _load_scenario(scenario_file: str, jobs: Optional[int] = None) -> ScenarioSpec:
    scenario = load_scenario(scenario_file)
    return scenario.with_concurrency(jobs) if jobs else scenario


def _seed(scenario: ScenarioSpec, seed: Optional[int]) -> int:
    return scenario.seed if seed is None else seed


def _out(out_dir: str) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    return target


def _write_markdown(path: Path, formatted: Dict[str, Any]) -> Optional[str]:
    if not formatted.get("success"):
        return None
    path.write_text(formatted["content"] + "\n", encoding="utf-8")
    return str(path)


# ============================================================================
# SPACE TOOLS
# ============================================================================

def check_space(space_file: str) -> Dict[str, Any]:
    """
    Parse a space file and report its structure.

    Args:
        space_file: Path to a space-DSL file

    Returns:
        Dictionary containing:
        - success (bool)
        - parameters, conditions, forbidden (int): declaration counts
        - fingerprint (str): stable space identifier
        - default (str): canonical default configuration
    """
    try:
        space = load_space(space_file)
        logger.info("parsed %s: %d parameters", space_file, len(space))
        return {
            "success": True,
            "space_file": space_file,
            "parameters": len(space),
            "conditions": len(space.conditions),
            "forbidden": len(space.forbidden),
            "fingerprint": space.fingerprint,
            "default": default_config(space).canonical,
        }
    except Exception as e:
        return _error(e, space_file=space_file)


def sample_space(space_file: str, n: int = 10, seed: int = 0, out_dir: Optional[str] = None) -> Dict[str, Any]:
    """
    Draw random configurations from a space.

    Returns:
        Dictionary with `configurations` (canonical strings) and, when
        `out_dir` is given, the path of `samples.txt`
    """
    try:
        if n < 1:
            raise ValueError(f"sample count must be at least 1, got {n}")
        space = load_space(space_file)
        configs = [c.canonical for c in sample_configurations(space, n, seed)]
        result: Dict[str, Any] = {"success": True, "seed": seed, "configurations": configs}
        if out_dir:
            path = _out(out_dir) / "samples.txt"
            path.write_text("\n".join(configs) + "\n", encoding="utf-8")
            result["samples_file"] = str(path)
        return result
    except Exception as e:
        return _error(e, configurations=[])


def export_space(space_file: str, out_dir: str = "out") -> Dict[str, Any]:
    """
    Convert a space file to ConfigSpace's pcs_new format.

    Returns:
        Dictionary with the path of `<space name>.pcs_new`
    """
    try:
        space = load_space(space_file)
        path = _out(out_dir) / f"{Path(space_file).stem}.pcs_new"
        path.write_text(write_pcs(space), encoding="utf-8")
        logger.info("exported %s to %s", space_file, path)
        return {"success": True, "space_file": space_file, "exported": str(path)}
    except Exception as e:
        return _error(e, space_file=space_file)


# ============================================================================
# REFINEMENT
# ============================================================================

def scan_space(
    scenario_file: str,
    n: int = DEFAULT_SCAN_SIZE,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out_dir: str = "out",
    min_support: float = MIN_SUPPORT,
    max_false_positive: float = MAX_FALSE_POSITIVE,
) -> Dict[str, Any]:
    """
    Crash-scan the scenario's space on its canary instance and propose refinements.

    Writes `scan-runs.jsonl`, `refinement.txt` and `<space file name>.refined`.
    The original space file is never modified.
    """
    try:
        scenario = _load_scenario(scenario_file, jobs)
        space = scenario.load_space()
        out = _out(out_dir)
        log = RunLog(out / "scan-runs.jsonl", fresh=True)
        report = crash_scan(scenario, space, n=n, seed=_seed(scenario, seed), log=log)
        result: Dict[str, Any] = {
            "success": True,
            "sampled": report.sampled,
            "crashes": len(report.crashing),
            "crash_rate": report.crash_rate,
            "proposals": [],
        }
        try:
            proposals = propose_refinements(report, min_support=min_support, max_false_positive=max_false_positive)
        except RefinementError:
            proposals = []
        (out / "refinement.txt").write_text(render_proposals(report, proposals), encoding="utf-8")
        refined = apply_refinements(space, proposals)
        refined_path = save_space(refined, out / (Path(scenario.space_file).name + ".refined"))
        result["proposals"] = [
            {"proposal": p.describe(), "support": p.support, "false_positive": p.false_positive}
            for p in proposals
        ]
        result["refined_space"] = str(refined_path)
        result["report_file"] = str(out / "refinement.txt")
        return result
    except Exception as e:
        return _error(e)


# ============================================================================
# CONFIGURATION
# ============================================================================

def tune(
    scenario_file: str,
    n_runs: int = 25,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out_dir: str = "out",
    method: str = "smbo",
    budget: Optional[int] = None,
    validation_runs: Optional[int] = None,
    parallel_runs: int = 1,
) -> Dict[str, Any]:
    """
    Run a configuration campaign of `n_runs` independent configurator runs.

    Args:
        scenario_file: Scenario JSON file
        n_runs: Independent configurator runs
        seed: Master seed (defaults to the scenario's); run i uses a seed derived from (seed, i)
        jobs: Concurrency limit for target runs (overrides the scenario)
        out_dir: Output directory (`run-XX/` per run plus `campaign.json`)
        method: "smbo" or "random"
        budget: Target runs per configurator run (defaults to the scenario's)
        validation_runs: When set, validate default and incumbents with this many runs per instance
        parallel_runs: Configurator runs executed at once

    Returns:
        Dictionary with per-run summaries and the best-training incumbent
    """
    try:
        scenario = _load_scenario(scenario_file, jobs)
        campaign = CampaignSpec(
            scenario=scenario,
            n_runs=n_runs,
            master_seed=_seed(scenario, seed),
            validation_runs=validation_runs or DEFAULT_VALIDATION_RUNS,
            method=method,
            budget=budget,
            parallel_runs=parallel_runs,
        )
        out = _out(out_dir)
        outcome = run_campaign(campaign, out)
        best = outcome.best_training
        if best is None:
            raise HarnessError(f"all {n_runs} configurator runs failed: {outcome.failures}")
        result: Dict[str, Any] = {
            "success": True,
            "campaign_file": str(out / "campaign.json"),
            "runs": outcome.summary()["runs"],
            "best_training": best.incumbent.canonical,
            "best_training_id": best.incumbent.config_id,
            "best_training_par_k": best.training_score,
            "failed_runs": len(outcome.failures),
        }
        if validation_runs:
            validation = validate_campaign(campaign, outcome, log_dir=out)
            for level, table in validation.tables.items():
                _write_table(table, out, level)
            result["validation"] = validation.summary()
        return result
    except Exception as e:
        return _error(e)


# ============================================================================
# VALIDATION AND RANKING
# ============================================================================

def _write_table(table: ValidationTable, out: Path, level: int) -> Dict[str, Optional[str]]:
    csv_path = out / f"validation-L{level}.csv"
    table.to_frame().to_csv(csv_path, index=False)
    markdown = _write_markdown(out / f"validation-L{level}.md", format_validation_table(table))
    scores_path = out / f"validation-L{level}-scores.txt"
    blocks = [f"{row.config_id}  {row.canonical}\n{render_score_report(row.report)}" for row in table.rows]
    scores_path.write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
    return {"csv": str(csv_path), "markdown": markdown, "scores": str(scores_path)}


def validate(
    scenario_file: str,
    config_files: Sequence[str],
    runs_per_instance: int = DEFAULT_VALIDATION_RUNS,
    load_levels: Sequence[int] = (),
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out_dir: str = "out",
) -> Dict[str, Any]:
    """
    Validate configurations (plus the default) at one or more load levels.

    Writes per level `validation-L<level>.jsonl` (run log), `.csv`, `.md` and a
    plain-text score report `validation-L<level>-scores.txt`; with several
    levels also `load-comparison.csv` and `.md`.
    """
    try:
        scenario = _load_scenario(scenario_file, jobs)
        space = scenario.load_space()
        configs = [default_config(space)] + [load_configuration(space, f) for f in config_files]
        levels = list(load_levels) or [scenario.concurrency_limit]
        out = _out(out_dir)
        tables: List[ValidationTable] = []
        files = {}
        for level in levels:
            table = validate_configurations(
                scenario, configs, runs_per_instance, level, space=space, seed=_seed(scenario, seed),
                log=RunLog(out / f"validation-L{level}.jsonl", fresh=True),
            )
            tables.append(table)
            files[str(level)] = _write_table(table, out, level)
        result: Dict[str, Any] = {
            "success": True,
            "files": files,
            "tables": [
                {
                    "load_tag": t.load_tag,
                    "rows": [
                        {"config_id": r.config_id, "par_k": r.overall, "rel_impr_pct": r.improvement,
                         "harness_errors": r.harness_errors, "default": r.is_default}
                        for r in t.rows
                    ],
                }
                for t in tables
            ],
        }
        if len(tables) > 1:
            comparison = compare_load_levels(tables)
            comparison.to_csv(out / "load-comparison.csv", index=False)
            _write_markdown(out / "load-comparison.md", format_load_comparison(comparison))
            result["load_comparison"] = comparison.to_dict(orient="records")
        return result
    except Exception as e:
        return _error(e)


def _table_from_log(scenario: ScenarioSpec, log_file: str) -> ValidationTable:
    space = scenario.load_space()
    results = RunLog(log_file).read(space)
    if not results:
        raise ValueError(f"run log {log_file} is empty")
    instances = [i for i in scenario.instances if any(r.spec.instance == i for r in results)]
    per_config = len(results) // max(len({r.config for r in results}), 1)
    return build_validation_table(
        results, default_config(space), ObjectiveSpec.from_scenario(scenario), instances,
        per_config // max(len(instances), 1),
    )


def rank(scenario_file: str, log_file: str, top: int = 10, out_dir: str = "out") -> Dict[str, Any]:
    """
    Rank configurations by validation PAR-k, recomputed from a validation run log.

    Writes `ranking.csv` and `ranking.md`.
    """
    try:
        scenario = _load_scenario(scenario_file)
        table = _table_from_log(scenario, log_file)
        entries = rank_by_validation(table, top)
        out = _out(out_dir)
        pd.DataFrame([e._asdict() for e in entries],
                     columns=["rank", "config_id", "score", "default_score"]).to_csv(out / "ranking.csv", index=False)
        _write_markdown(out / "ranking.md", format_ranking(entries))
        return {
            "success": True,
            "load_tag": table.load_tag,
            "default_score": table.default_row.overall,
            "ranking": [e._asdict() for e in entries],
        }
    except Exception as e:
        return _error(e, ranking=[])


# ============================================================================
# ABLATION
# ============================================================================

def ablate(
    scenario_file: str,
    target_file: str,
    runs_per_eval: int = DEFAULT_RUNS_PER_EVAL,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out_dir: str = "out",
    instances: Sequence[str] = (),
    top: Optional[int] = None,
) -> Dict[str, Any]:
    """
    Ablation path from the default to the configuration in `target_file`.

    Writes `ablation.csv`, `ablation.md` and the run log `ablation-runs.jsonl`.
    """
    try:
        scenario = _load_scenario(scenario_file, jobs)
        space = scenario.load_space()
        target = load_configuration(space, target_file)
        out = _out(out_dir)
        try:
            path = ablation_path(
                scenario, ObjectiveSpec.from_scenario(scenario), default_config(space), target,
                instances=list(instances) or None, runs_per_eval=runs_per_eval, seed=_seed(scenario, seed),
                space=space,
                log=RunLog(out / "ablation-runs.jsonl", fresh=True),
            )
            stuck = None
        except StuckAblationError as e:
            if e.path is None:
                raise
            path, stuck = e.path, str(e)
        pd.DataFrame(path.rows(), columns=["round", "parameter", "from", "to", "par_k", "portion"]).to_csv(
            out / "ablation.csv", index=False)
        _write_markdown(out / "ablation.md", format_ablation(path, top))
        return {
            "success": stuck is None,
            "default_score": path.default_score,
            "target_score": path.target_score,
            "normalized": path.normalized,
            "steps": path.rows(),
            **({"error": stuck, "error_kind": "usage"} if stuck else {}),
        }
    except Exception as e:
        return _error(e, steps=[])


# ============================================================================
# PLOT DATA
# ============================================================================

def plot_data(
    scenario_file: str,
    kind: str,
    out_dir: str = "out",
    log_file: Optional[str] = None,
    config_id: Optional[str] = None,
    campaign_dir: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Write plot data for external plotting.

    Args:
        scenario_file: Scenario JSON file
        kind: "ecdf" or "scatter" (from a validation run log) or "trajectory" (from a campaign directory)
        out_dir: Output directory (`ecdf.csv`, `scatter.csv` or `trajectories.csv`)
        log_file: Validation run log for ecdf and scatter
        config_id: Configured side of the scatter (default: best by validation)
        campaign_dir: Campaign output directory for trajectories
    """
    try:
        scenario = _load_scenario(scenario_file)
        spec = ObjectiveSpec.from_scenario(scenario)
        out = _out(out_dir)
        if kind == "trajectory":
            if not campaign_dir:
                raise ValueError("trajectory plot data needs --campaign-dir")
            frames = []
            for path in sorted(Path(campaign_dir).glob("run-*/trajectory.csv")):
                frame = pd.read_csv(path, dtype={"config_id": str})
                frame.insert(0, "run", path.parent.name)
                frames.append(frame)
            if not frames:
                raise ValueError(f"no trajectories under {campaign_dir}")
            target = out / "trajectories.csv"
            pd.concat(frames, ignore_index=True).to_csv(target, index=False)
            return {"success": True, "kind": kind, "file": str(target), "runs": len(frames)}

        if not log_file:
            raise ValueError(f"{kind} plot data needs --log")
        table = _table_from_log(scenario, log_file)
        results = [r for runs in table.results.values() for r in runs]
        if kind == "ecdf":
            target = emit_plot_data(split_by_config(results), "ecdf", out / "ecdf.csv", spec)
        elif kind == "scatter":
            if config_id is None:
                best = best_by_validation(table)
                if best is None:
                    raise ValueError("the log holds no configuration besides the default")
                config_id = best.config_id
            pair = pair_for_scatter(results, table.default_row.config_id, config_id)
            target = emit_plot_data(pair, "scatter", out / "scatter.csv", spec)
        else:
            target = emit_plot_data(results, kind, out / f"{kind}.csv", spec)
        return {"success": True, "kind": kind, "file": str(target)}
    except Exception as e:
        return _error(e, kind=kind)


def dump_json(result: Dict[str, Any]) -> str:
    return json.dumps(result, indent=2, sort_keys=True, default=str)
