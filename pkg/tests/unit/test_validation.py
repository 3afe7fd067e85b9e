"""
Unit tests for validation tables, ranking and load-level discipline.
"""

import pandas as pd
import pytest

from src.objective import ObjectiveSpec
from src.paramspace import SpaceMismatchError, default_config, parse_space, validate_config
from src.reporting.tables import format_validation_table
from src.reporting.validation import (
    LoadTagError,
    best_by_validation,
    build_validation_table,
    compare_load_levels,
    rank_by_validation,
    validate_configurations,
)
from src.runner import HarnessError, Outcome, RunLog, RunResult, RunSpec

pytestmark = pytest.mark.unit

SPACE = parse_space("n integer [0, 9] [0]")
DEFAULT = default_config(SPACE)
SPEC = ObjectiveSpec(cutoff=10)


def config(n):
    return validate_config(SPACE, {"n": n})


def runs(cfg, times, instances=("i1", "i2"), load_tag=1, outcome=Outcome.SUCCESS):
    """One run per (instance, seed) with the given times, seeds 0.."""
    return [
        RunResult(RunSpec(cfg, instance, seed), outcome, time, load_tag=load_tag)
        for instance in instances
        for seed, time in enumerate(times)
    ]


def table(scores, load_tag=1):
    """Table from {n: time}; every run of a configuration takes the same time."""
    results = [r for n, time in scores.items() for r in runs(config(n), [time, time], load_tag=load_tag)]
    return build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 2)


class TestBuildValidationTable:
    """Tests for aggregating validation runs."""

    def test_rows_and_improvement(self):
        result = table({0: 4.0, 3: 3.0, 5: 5.0})

        assert [row.config_id for row in result.rows][0] == DEFAULT.config_id
        assert result.default_row.overall == 4.0
        assert result.row(config(3).config_id).improvement == 25.0
        assert result.row(config(5).config_id).improvement == -25.0

    def test_default_listed_first_even_if_run_last(self):
        results = runs(config(2), [1.0]) + runs(DEFAULT, [2.0])

        result = build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 1)

        assert result.rows[0].is_default

    def test_mixed_load_tags(self):
        results = runs(DEFAULT, [1.0], load_tag=1) + runs(config(1), [1.0], load_tag=8)
        with pytest.raises(LoadTagError):
            build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 1)

    def test_load_tag_is_kept(self):
        assert table({0: 1.0, 1: 2.0}, load_tag=8).load_tag == 8

    def test_default_required(self):
        with pytest.raises(ValueError):
            build_validation_table(runs(config(1), [1.0]), DEFAULT, SPEC, ["i1", "i2"], 1)

    def test_all_runs_failed_to_start(self):
        results = runs(DEFAULT, [1.0]) + runs(config(1), [0.0], outcome=Outcome.HARNESS_ERROR)
        with pytest.raises(HarnessError):
            build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 1)

    def test_harness_errors_are_reported(self):
        results = runs(DEFAULT, [1.0, 1.0]) + runs(config(1), [1.0])
        results.append(RunResult(RunSpec(config(1), "i1", 1), Outcome.HARNESS_ERROR, 0.0, error="no such file"))

        result = build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 2)

        assert result.row(config(1).config_id).harness_errors == 1
        assert result.row(config(1).config_id).report.n_runs == 2

    def test_frame(self):
        frame = table({0: 4.0, 3: 2.0}).to_frame()

        assert list(frame.columns) == ["config_id", "instance", "par_k", "rel_impr_pct", "harness_errors",
                                       "load_tag"]
        assert len(frame) == 2 * 3
        overall = frame[(frame["instance"] == "ALL") & (frame["config_id"] == config(3).config_id)]
        assert overall["rel_impr_pct"].iloc[0] == 50.0

    def test_zero_default_instance_has_no_improvement(self):
        results = [
            RunResult(RunSpec(cfg, instance, 0), Outcome.SUCCESS, time)
            for cfg, times in ((DEFAULT, (0.0, 2.0)), (config(3), (0.0, 1.0)))
            for instance, time in zip(("i1", "i2"), times)
        ]

        frame = build_validation_table(results, DEFAULT, SPEC, ["i1", "i2"], 1).to_frame()

        rows = frame[frame["config_id"] == config(3).config_id].set_index("instance")
        assert pd.isna(rows.loc["i1", "rel_impr_pct"])
        assert rows.loc["i2", "rel_impr_pct"] == 50.0
        assert rows.loc["ALL", "rel_impr_pct"] == 50.0

    def test_zero_default_overall_has_no_improvement(self):
        result = table({0: 0.0, 3: 1.0})

        assert result.row(config(3).config_id).improvement is None
        assert format_validation_table(result)["content"].splitlines()[-1].endswith("| - |")


class TestRanking:
    """Tests for rank_by_validation and best_by_validation."""

    def test_ascending_score(self):
        ranking = rank_by_validation(table({0: 4.0, 1: 3.0, 2: 1.0, 3: 2.0}))

        assert [e.config_id for e in ranking] == [config(n).config_id for n in (2, 3, 1)]
        assert [e.rank for e in ranking] == [1, 2, 3]
        assert all(e.default_score == 4.0 for e in ranking)

    def test_ties_broken_by_id(self):
        ranking = rank_by_validation(table({0: 4.0, 1: 2.0, 2: 2.0}))

        assert [e.config_id for e in ranking] == sorted([config(1).config_id, config(2).config_id])

    def test_top(self):
        assert len(rank_by_validation(table({0: 4.0, 1: 3.0, 2: 1.0}), top=1)) == 1

    def test_default_never_ranked(self):
        result = table({0: 1.0})

        assert rank_by_validation(result) == []
        assert best_by_validation(result) is None

    def test_best(self):
        assert best_by_validation(table({0: 4.0, 1: 3.0})).config_id == config(1).config_id


class TestCompareLoadLevels:
    """Tests for per-load summaries."""

    def test_one_row_per_level(self):
        frame = compare_load_levels([table({0: 4.0, 1: 2.0}, load_tag=8), table({0: 2.0, 1: 1.5}, load_tag=1)])

        assert frame["load_tag"].tolist() == [1, 8]
        assert frame["rel_impr_pct"].tolist() == [25.0, 50.0]

    def test_repeated_level(self):
        with pytest.raises(LoadTagError):
            compare_load_levels([table({0: 1.0}, load_tag=2), table({0: 1.0}, load_tag=2)])


class TestValidateConfigurations:
    """Tests against the quadratic target."""

    def test_validates_at_the_requested_load(self, make_quadratic, tmp_path):
        scenario = make_quadratic(instances=("i1", "i2"), concurrency_limit=2)
        space = scenario.load_space()
        best = validate_config(space, {"a": 63, "b": 27})
        log = RunLog(tmp_path / "validation.jsonl")

        result = validate_configurations(scenario, [default_config(space), best], runs_per_instance=3,
                                         load_level=3, log=log)

        assert result.load_tag == 3
        assert result.row(best.config_id).overall == pytest.approx(0.5)
        assert result.default_row.overall == pytest.approx(0.5 + (63 ** 2 + 73 ** 2) / 500)
        assert len(log.read(space)) == 2 * 2 * 3
        assert {r.load_tag for r in log.read(space)} == {3}

    def test_default_required(self, quadratic_scenario):
        space = quadratic_scenario.load_space()
        with pytest.raises(ValueError):
            validate_configurations(quadratic_scenario, [validate_config(space, {"a": 1, "b": 1})])

    def test_foreign_configuration(self, quadratic_scenario):
        with pytest.raises(SpaceMismatchError):
            validate_configurations(quadratic_scenario, [DEFAULT])

    def test_invalid_runs(self, quadratic_scenario):
        space = quadratic_scenario.load_space()
        with pytest.raises(ValueError):
            validate_configurations(quadratic_scenario, [default_config(space)], runs_per_instance=0)
