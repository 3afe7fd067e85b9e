"""
Table Formatting - Renders scores, rankings and ablation paths as markdown.

Handles:
- Validation tables (default | configured | rel. impr. per instance)
- Rankings (top configurations by validation score)
- Ablation paths (distance from default, parameter, from, to, portion)
- Load-level comparisons
- Score reports (aligned plain text)

Scores are rounded to 3 decimals and percentages to 2.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from src.ablation import AblationPath
from src.objective import ScoreReport
from src.reporting.validation import RankEntry, ValidationTable, rank_by_validation


def _score(value: Optional[float]) -> str:
    return "-" if value is None or pd.isna(value) else f"{value:.3f}"


def _percent(value: Optional[float]) -> str:
    return "-" if value is None or pd.isna(value) else f"{value:.2f}"


def _instance_label(instance: str) -> str:
    return Path(instance).name or instance


def _markdown(header: Sequence[str], rows: List[Sequence[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


# ============================================================================
# TABLE FORMATTERS
# ============================================================================

def format_validation_table(table: ValidationTable, config_id: Optional[str] = None) -> Dict[str, Any]:
    """
    Default-vs-configured table for one configuration.

    Args:
        table: Validation table
        config_id: Configuration to show (default: best by validation)

    Returns:
        Dictionary with markdown table string and metadata
    """
    try:
        if config_id is None:
            ranking = rank_by_validation(table, top=1)
            if not ranking:
                return {
                    "success": False,
                    "visualization_type": "validation_table",
                    "content": "",
                    "error": "Table holds only the default configuration"
                }
            config_id = ranking[0].config_id
        row = table.row(config_id)
        default = table.default_row

        rows = []
        for instance in table.instances:
            before = default.per_instance[instance]
            after = row.per_instance[instance]
            rows.append([
                _instance_label(instance),
                _score(before),
                _score(after),
                _percent(100.0 * (before - after) / before if before > 0 else None),
            ])
        rows.append(["**All instances**", _score(default.overall), _score(row.overall), _percent(row.improvement)])

        lines = [f"### Validation at load {table.load_tag} ({table.runs_per_instance} runs per instance)", ""]
        lines += _markdown(["Instance", "default", "configured", "rel. impr. [%]"], rows)
        if row.harness_errors or default.harness_errors:
            lines.append("")
            lines.append(f"*Excluded harness errors: default {default.harness_errors}, "
                         f"configured {row.harness_errors}*")

        return {
            "success": True,
            "visualization_type": "validation_table",
            "content": "\n".join(lines),
            "metadata": {
                "config_id": config_id,
                "load_tag": table.load_tag,
                "instances": len(table.instances),
                "improvement": row.improvement,
            }
        }

    except Exception as e:
        return {
            "success": False,
            "visualization_type": "validation_table",
            "content": "",
            "error": str(e)
        }


def format_ranking(entries: Sequence[RankEntry]) -> Dict[str, Any]:
    """Ranking table with the default's score alongside."""
    if not entries:
        return {
            "success": False,
            "visualization_type": "ranking",
            "content": "",
            "error": "No configurations to rank"
        }
    rows = [
        [str(e.rank), f"`{e.config_id}`", _score(e.score), _score(e.default_score)]
        for e in entries
    ]
    lines = _markdown(["Rank", "Configuration", "PAR score", "default"], rows)
    return {
        "success": True,
        "visualization_type": "ranking",
        "content": "\n".join(lines),
        "metadata": {
            "entries": len(entries),
            "best": entries[0].config_id,
            "default_outranked": entries[0].score < entries[0].default_score,
        }
    }


def format_ablation(path: AblationPath, top: Optional[int] = None) -> Dict[str, Any]:
    """
    Ablation path table.

    Args:
        path: Greedy ablation path
        top: Show only the steps with the largest portions (all when None)
    """
    steps = path.top(top) if top else path.steps
    rows = [
        [str(s.round), s.parameter, s.to_row()["from"], s.to_row()["to"], _percent(s.portion)]
        for s in steps
    ]
    lines = _markdown(
        ["Distance from default", "Parameter modified", "From", "To", "Approx. portion of rel. impr. [%]"], rows)
    lines.append("")
    lines.append(f"*Default {_score(path.default_score)}, target {_score(path.target_score)}; "
                 f"{path.runs_per_eval} runs per instance per evaluation*")
    if not path.normalized:
        lines.append("*Target is not better than the default: portions are relative to the default score*")
    return {
        "success": True,
        "visualization_type": "ablation",
        "content": "\n".join(lines),
        "metadata": {
            "steps": len(path.steps),
            "shown": len(steps),
            "normalized": path.normalized,
        }
    }


def format_load_comparison(frame: pd.DataFrame) -> Dict[str, Any]:
    """Default and best configuration per load level."""
    rows = [
        [str(r.load_tag), _score(r.default_par_k), f"`{r.best_config_id}`" if r.best_config_id else "-",
         _score(r.best_par_k), _percent(r.rel_impr_pct)]
        for r in frame.itertuples(index=False)
    ]
    lines = _markdown(["Load", "default", "best configuration", "best", "rel. impr. [%]"], rows)
    return {
        "success": True,
        "visualization_type": "load_comparison",
        "content": "\n".join(lines),
        "metadata": {"levels": len(rows)}
    }


def render_score_report(report: ScoreReport) -> str:
    """Aligned plain-text table of one configuration's scores."""
    width = max([len("overall")] + [len(_instance_label(i)) for i in report.per_instance])
    lines = [f"{'instance':<{width}}  {'PAR':>10}  {'ok':>5}  {'timeout':>7}  {'crash':>5}"]
    for row in report.rows():
        lines.append(
            f"{_instance_label(row['instance']):<{width}}  {row['par_k']:>10.3f}  {row['n_success']:>5}  "
            f"{row['n_timeout']:>7}  {row['n_crash']:>5}"
        )
    lines.append(f"{'overall':<{width}}  {report.overall:>10.3f}")
    return "\n".join(lines)
