"""
Reporting: campaigns, validation, rankings, tables and plot data.

Usage:
    from src.reporting import CampaignSpec, run_campaign, validate_configurations

    outcome = run_campaign(CampaignSpec(scenario, n_runs=3, budget=300), out_dir="out")
    table = validate_configurations(scenario, [default, outcome.best_training.incumbent])
"""

from src.reporting.campaign import (
    CampaignResult,
    CampaignSpec,
    CampaignValidation,
    derive_seed,
    run_campaign,
    validate_campaign,
    write_result,
)

from src.reporting.validation import (
    LoadTagError,
    RankEntry,
    ValidationTable,
    best_by_validation,
    build_validation_table,
    compare_load_levels,
    rank_by_validation,
    validate_configurations,
)

from src.reporting.plot_data import (
    PLOT_KINDS,
    emit_plot_data,
)

from src.reporting.tables import (
    format_ablation,
    format_load_comparison,
    format_ranking,
    format_validation_table,
    render_score_report,
)

__all__ = [
    # Campaigns
    "CampaignResult",
    "CampaignSpec",
    "CampaignValidation",
    "derive_seed",
    "run_campaign",
    "validate_campaign",
    "write_result",

    # Validation
    "LoadTagError",
    "RankEntry",
    "ValidationTable",
    "best_by_validation",
    "build_validation_table",
    "compare_load_levels",
    "rank_by_validation",
    "validate_configurations",

    # Plot data
    "PLOT_KINDS",
    "emit_plot_data",

    # Tables
    "format_ablation",
    "format_load_comparison",
    "format_ranking",
    "format_validation_table",
    "render_score_report",
]
