"""
Unit tests for the markdown table formatters.

Tests the formatter contract (success, visualization_type, content,
metadata) and the rendered numbers.
"""

import pytest

from src.ablation import AblationPath, AblationStep
from src.objective import ObjectiveSpec, aggregate_score
from src.paramspace import default_config, parse_space, validate_config
from src.reporting.tables import (
    format_ablation,
    format_load_comparison,
    format_ranking,
    format_validation_table,
    render_score_report,
)
from src.reporting.validation import (
    RankEntry,
    build_validation_table,
    compare_load_levels,
    rank_by_validation,
)
from src.runner import Outcome, RunResult, RunSpec

pytestmark = pytest.mark.unit

SPACE = parse_space("n integer [0, 9] [0]")
DEFAULT = default_config(SPACE)
BETTER = validate_config(SPACE, {"n": 4})


def runs(config, time, instances=("bench/splay.js", "bench/richards.js")):
    return [RunResult(RunSpec(config, instance, 0), Outcome.SUCCESS, time) for instance in instances]


@pytest.fixture
def validation_table():
    results = runs(DEFAULT, 4.546) + runs(BETTER, 4.010)
    return build_validation_table(results, DEFAULT, ObjectiveSpec(cutoff=60),
                                  ["bench/splay.js", "bench/richards.js"], 1)


@pytest.fixture
def ablation():
    path = AblationPath(default_score=1.0, target_score=0.4, runs_per_eval=5)
    path.steps = [
        AblationStep(1, "x", "false", "true", 0.7, 50.0),
        AblationStep(2, "y", "false", "true", 0.5, 100 / 3),
        AblationStep(3, "z", "false", "true", 0.4, 100 / 6),
    ]
    return path


class TestFormatValidationTable:
    """Tests for the default-vs-configured table."""

    def test_best_configuration_by_default(self, validation_table):
        result = format_validation_table(validation_table)

        assert result["success"] is True
        assert result["visualization_type"] == "validation_table"
        assert result["metadata"]["config_id"] == BETTER.config_id
        assert "| splay.js | 4.546 | 4.010 | 11.79 |" in result["content"]
        assert "| **All instances** | 4.546 | 4.010 | 11.79 |" in result["content"]

    def test_header(self, validation_table):
        content = format_validation_table(validation_table)["content"]

        assert content.startswith("### Validation at load 1 (1 runs per instance)")
        assert "| Instance | default | configured | rel. impr. [%] |" in content

    def test_unknown_configuration(self, validation_table):
        result = format_validation_table(validation_table, config_id="nope")

        assert result["success"] is False
        assert "error" in result

    def test_default_only(self):
        only_default = build_validation_table(runs(DEFAULT, 1.0), DEFAULT, ObjectiveSpec(cutoff=60),
                                              ["bench/splay.js", "bench/richards.js"], 1)

        assert format_validation_table(only_default)["success"] is False


class TestFormatRanking:
    """Tests for ranking tables."""

    def test_rows(self, validation_table):
        result = format_ranking(rank_by_validation(validation_table))

        assert result["success"] is True
        assert f"| 1 | `{BETTER.config_id}` | 4.010 | 4.546 |" in result["content"]
        assert result["metadata"]["default_outranked"] is True

    def test_empty(self):
        assert format_ranking([])["success"] is False

    def test_default_not_outranked(self):
        result = format_ranking([RankEntry(1, "abc", 5.0, 4.0)])
        assert result["metadata"]["default_outranked"] is False


class TestFormatAblation:
    """Tests for ablation tables."""

    def test_all_steps(self, ablation):
        result = format_ablation(ablation)

        assert result["metadata"] == {"steps": 3, "shown": 3, "normalized": True}
        assert "| 1 | x | false | true | 50.00 |" in result["content"]
        assert "| 3 | z | false | true | 16.67 |" in result["content"]
        assert "5 runs per instance" in result["content"]

    def test_top(self, ablation):
        result = format_ablation(ablation, top=2)

        assert result["metadata"]["shown"] == 2
        assert "| z |" not in result["content"]

    def test_not_normalized_note(self, ablation):
        ablation.normalized = False
        assert "relative to the default score" in format_ablation(ablation)["content"]


def test_format_load_comparison(validation_table):
    result = format_load_comparison(compare_load_levels([validation_table]))

    assert result["success"] is True
    assert result["metadata"]["levels"] == 1
    assert f"| 1 | 4.546 | `{BETTER.config_id}` | 4.010 | 11.79 |" in result["content"]


def test_render_score_report():
    results = runs(DEFAULT, 2.0) + [RunResult(RunSpec(DEFAULT, "bench/splay.js", 1), Outcome.TIMEOUT, 60.0)]
    report = aggregate_score(results, DEFAULT, ["bench/splay.js", "bench/richards.js"], ObjectiveSpec(cutoff=60))

    lines = render_score_report(report).splitlines()

    assert lines[0].split() == ["instance", "PAR", "ok", "timeout", "crash"]
    assert any(line.split() == ["splay.js", "301.000", "1", "1", "0"] for line in lines)
    assert lines[-1].split() == ["overall", "201.333"]
