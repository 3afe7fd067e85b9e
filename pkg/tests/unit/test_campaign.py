"""
Unit tests for campaigns: seed derivation, per-run artifacts, failures and
campaign validation.
"""

import json

import pytest

from src.paramspace import load_configuration
from src.reporting.campaign import (
    CampaignSpec,
    derive_seed,
    run_campaign,
    run_directory,
    validate_campaign,
)

pytestmark = pytest.mark.unit


class TestDeriveSeed:
    """Tests for per-run seeds."""

    def test_stable_and_distinct(self):
        seeds = [derive_seed(5, i) for i in range(20)]

        assert seeds == [derive_seed(5, i) for i in range(20)]
        assert len(set(seeds)) == 20

    def test_master_seed_matters(self):
        assert derive_seed(1, 0) != derive_seed(2, 0)


class TestCampaignSpec:
    """Tests for campaign validation of arguments."""

    @pytest.mark.parametrize("field,value", [
        ("n_runs", 0), ("validation_runs", 0), ("parallel_runs", 0), ("method", "annealing"), ("load_levels", (0,)),
    ])
    def test_invalid(self, quadratic_scenario, field, value):
        with pytest.raises(ValueError):
            CampaignSpec(quadratic_scenario, **{field: value})

    def test_load_levels_default_to_the_scenario(self, make_quadratic):
        campaign = CampaignSpec(make_quadratic(budget_runs=10, concurrency_limit=3))
        assert campaign.load_levels == (3,)


class TestRunCampaign:
    """Tests for run_campaign on the quadratic target."""

    def test_artifacts(self, quadratic_scenario, tmp_path):
        campaign = CampaignSpec(quadratic_scenario, n_runs=2, master_seed=4, method="random", budget=12)

        result = run_campaign(campaign, tmp_path)

        assert len(result) == 2
        for index in range(2):
            directory = run_directory(tmp_path, index)
            for name in ("trajectory.csv", "incumbent.cfg", "summary.json", "runs.jsonl"):
                assert (directory / name).exists()
            summary = json.loads((directory / "summary.json").read_text())
            assert summary["seed"] == derive_seed(4, index)
            assert summary["runs_used"] <= 12
        campaign_file = json.loads((tmp_path / "campaign.json").read_text())
        assert campaign_file["best_training_index"] == result.best_training_index
        assert sum(run["best_training"] for run in campaign_file["runs"]) == 1

    def test_best_training_is_lowest(self, quadratic_scenario):
        result = run_campaign(CampaignSpec(quadratic_scenario, n_runs=3, method="random", budget=10))

        assert result.best_training.training_score == min(r.training_score for r in result)

    def test_incumbent_file_round_trips(self, quadratic_scenario, tmp_path):
        result = run_campaign(CampaignSpec(quadratic_scenario, n_runs=1, method="random", budget=8), tmp_path)

        saved = load_configuration(quadratic_scenario.load_space(), run_directory(tmp_path, 0) / "incumbent.cfg")

        assert saved == result.best_training.incumbent

    def test_parallel_runs_match_sequential(self, quadratic_scenario):
        sequential = run_campaign(CampaignSpec(quadratic_scenario, n_runs=3, method="random", budget=8))
        parallel = run_campaign(CampaignSpec(quadratic_scenario, n_runs=3, method="random", budget=8,
                                             parallel_runs=3))

        assert [r.incumbent for r in sequential] == [r.incumbent for r in parallel]

    def test_failed_runs_are_recorded(self, make_quadratic, tmp_path):
        # neither the scenario nor the campaign sets a budget, so every run fails
        campaign = CampaignSpec(make_quadratic(), n_runs=2, method="random")

        result = run_campaign(campaign, tmp_path)

        assert len(result) == 0
        assert result.best_training is None
        assert sorted(result.failures) == [0, 1]
        assert "budget" in result.failures[0]
        assert "error" in result.summary()["runs"][0]


class TestValidateCampaign:
    """Tests for validating campaign incumbents."""

    def test_both_selections_reported(self, quadratic_scenario, tmp_path):
        campaign = CampaignSpec(quadratic_scenario, n_runs=2, method="random", budget=10, validation_runs=1,
                                load_levels=(1, 2))
        outcome = run_campaign(campaign, tmp_path)

        validation = validate_campaign(campaign, outcome, log_dir=tmp_path)

        assert sorted(validation.tables) == [1, 2]
        assert validation.best_training_id == outcome.best_training.incumbent.config_id
        assert set(validation.summary()["best_validation_optimistic"]) == {"1", "2"}
        assert (tmp_path / "validation-L2.jsonl").exists()
        assert validation.tables[2].load_tag == 2

    def test_nothing_to_validate(self, make_quadratic):
        campaign = CampaignSpec(make_quadratic(), n_runs=1, method="random")
        with pytest.raises(ValueError):
            validate_campaign(campaign, run_campaign(campaign))
