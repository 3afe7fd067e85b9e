"""
Unit tests for crash scanning and refinement mining.

The scan tests run the crashy target (exit 1 iff a=true and b=true); the
mining tests use hand-built crash reports.
"""

import pytest

from src.paramspace import ForbiddenClause, parse_space, validate_config
from src.refine import (
    CrashReport,
    ProposalKind,
    RefinementError,
    RefinementProposal,
    apply_refinements,
    crash_scan,
    propose_refinements,
    render_proposals,
)
from src.runner import RunLog

pytestmark = pytest.mark.unit

NUMERIC_SPACE = parse_space("n integer [0, 100] [10]\nflag {true, false} [true]")


def numeric_report(crash_flag=None):
    """Crashes at n >= 90; the flag alternates unless pinned."""
    def config(n, i, pinned=None):
        flag = pinned if pinned is not None else ("true" if i % 2 else "false")
        return validate_config(NUMERIC_SPACE, {"n": n, "flag": flag})

    return CrashReport(
        space=NUMERIC_SPACE,
        canary="canary",
        sampled=101,
        crashing=[config(n, i, crash_flag) for i, n in enumerate(range(90, 101))],
        non_crashing=[config(n, i) for i, n in enumerate(range(0, 90))],
    )


class TestCrashScan:
    """Tests for crash_scan against a real target."""

    def test_finds_the_crashing_pair(self, crashy_scenario, tmp_path):
        log = RunLog(tmp_path / "scan.jsonl")

        report = crash_scan(crashy_scenario, n=200, seed=11, log=log)

        assert report.sampled == 200
        assert len(report.crashing) + len(report.non_crashing) == 200
        assert all(c["a"] == "true" and c["b"] == "true" for c in report.crashing)
        assert 0.1 < report.crash_rate < 0.4
        assert len(log.read()) == 200

    def test_mined_clause(self, crashy_scenario):
        report = crash_scan(crashy_scenario, n=200, seed=11)

        proposals = propose_refinements(report)

        assert len(proposals) == 1
        assert proposals[0].kind == ProposalKind.FORBIDDEN_CLAUSE
        assert proposals[0].clause == ForbiddenClause((("a", "true"), ("b", "true")))
        assert proposals[0].support == 1.0
        assert proposals[0].false_positive == 0.0

    def test_same_seed_same_report(self, crashy_scenario):
        first = crash_scan(crashy_scenario, n=40, seed=3)
        second = crash_scan(crashy_scenario, n=40, seed=3)

        assert first.crashing == second.crashing

    def test_invalid_size(self, crashy_scenario):
        with pytest.raises(ValueError):
            crash_scan(crashy_scenario, n=0)


class TestProposeRefinements:
    """Tests for mining clauses and numeric cuts."""

    def test_numeric_upper_cut(self):
        proposals = propose_refinements(numeric_report())

        assert len(proposals) == 1
        proposal = proposals[0]
        assert proposal.kind == ProposalKind.DOMAIN_REDUCTION
        assert (proposal.parameter, proposal.lower, proposal.upper) == ("n", 0, 89)
        assert proposal.support == 1.0
        assert proposal.false_positive == 0.0

    def test_never_excludes_the_default(self):
        proposals = propose_refinements(numeric_report(crash_flag="true"))

        assert all(p.kind == ProposalKind.DOMAIN_REDUCTION for p in proposals)

    def test_false_positive_threshold(self):
        report = numeric_report()
        report.non_crashing.append(validate_config(NUMERIC_SPACE, {"n": 95, "flag": "true"}))

        assert [p.upper for p in propose_refinements(report)] == [89]
        assert propose_refinements(report, max_false_positive=0.0) == []

    def test_real_cut_keeps_the_default(self):
        space = parse_space("r real [0.0, 1.0] [0.9]")
        crashing = [validate_config(space, {"r": v}) for v in (0.95, 0.97, 0.99)]
        non_crashing = [validate_config(space, {"r": v}) for v in (0.1, 0.3, 0.5)]
        report = CrashReport(space=space, canary="canary", sampled=6, crashing=crashing, non_crashing=non_crashing)

        proposals = propose_refinements(report)

        assert len(proposals) == 1
        assert proposals[0].parameter == "r"
        assert proposals[0].lower <= 0.9 <= proposals[0].upper
        assert proposals[0].upper == 0.9
        assert apply_refinements(space, proposals)["r"].contains(0.9)

    def test_no_crashes(self):
        report = CrashReport(space=NUMERIC_SPACE, canary="c", sampled=5)
        with pytest.raises(RefinementError):
            propose_refinements(report)


class TestApplyRefinements:
    """Tests for building the refined space."""

    def test_clause_and_reduction(self, forbidden_space):
        proposals = [
            RefinementProposal(ProposalKind.FORBIDDEN_CLAUSE, 1.0, 0.0,
                               clause=ForbiddenClause((("a", "true"), ("c", 9)))),
            RefinementProposal(ProposalKind.DOMAIN_REDUCTION, 1.0, 0.0, parameter="c", lower=0, upper=5),
        ]

        refined = apply_refinements(forbidden_space, proposals)

        assert len(refined.forbidden) == len(forbidden_space.forbidden) + 1
        assert refined["c"].upper == 5
        assert forbidden_space["c"].upper == 9

    def test_duplicate_clause_applied_once(self, forbidden_space):
        existing = forbidden_space.forbidden[0]
        proposal = RefinementProposal(ProposalKind.FORBIDDEN_CLAUSE, 1.0, 0.0, clause=existing)

        assert len(apply_refinements(forbidden_space, [proposal]).forbidden) == 1

    def test_invalid_proposal_skipped(self, forbidden_space):
        # excludes the default value of c
        proposal = RefinementProposal(ProposalKind.DOMAIN_REDUCTION, 1.0, 0.0, parameter="c", lower=5, upper=9)

        assert apply_refinements(forbidden_space, [proposal])["c"].lower == 0


def test_render_proposals():
    report = numeric_report()
    text = render_proposals(report, propose_refinements(report))

    assert "crashes: 11 (10.89%)" in text
    assert "restrict n to [0, 89]" in text
    assert "support 1.000" in text


def test_render_without_proposals():
    report = numeric_report()
    assert "No proposals" in render_proposals(report, [])
