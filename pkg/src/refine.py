"""
Space refinement from crash scans.

A draft space is hardened by running many random configurations on a cheap
canary instance, then mining the crashing configurations for forbidden
value combinations (up to pairs of categorical assignments) and numeric
threshold cuts. Proposals are advisory: `apply_refinements` produces a new
space for review and never edits the original file.

Example usage:
    report = crash_scan(scenario, space, n=1000, seed=7)
    proposals = propose_refinements(report)
    refined = apply_refinements(space, proposals)
    print(render_proposals(report, proposals))
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.paramspace import (
    Configuration,
    DomainKind,
    ForbiddenClause,
    Parameter,
    ParameterSpace,
    SpaceError,
    default_config,
    format_value,
    sample_configurations,
)
from src.runner import HarnessError, Outcome, RunLog, RunSpec, harness_errors, run_batch
from src.scenario import ScenarioSpec

logger = logging.getLogger(__name__)

DEFAULT_SCAN_SIZE = 100_000
MIN_SUPPORT = 0.9
MAX_FALSE_POSITIVE = 0.05

Assignment = Tuple[str, str]


class RefinementError(ValueError):
    """Proposals cannot be derived from the given crash report."""


class ProposalKind(str, Enum):
    FORBIDDEN_CLAUSE = "forbidden-clause"
    DOMAIN_REDUCTION = "domain-reduction"


@dataclass
class CrashReport:
    """Result of a crash scan on the canary instance."""

    space: ParameterSpace
    canary: str
    sampled: int
    crashing: List[Configuration] = field(default_factory=list)
    non_crashing: List[Configuration] = field(default_factory=list)

    @property
    def crash_rate(self) -> float:
        return len(self.crashing) / self.sampled if self.sampled else 0.0


@dataclass(frozen=True)
class RefinementProposal:
    """A forbidden clause or a reduced numeric range, with its evidence."""

    kind: ProposalKind
    support: float
    false_positive: float
    clause: Optional[ForbiddenClause] = None
    parameter: Optional[str] = None
    lower: Optional[float] = None
    upper: Optional[float] = None

    def describe(self) -> str:
        if self.kind == ProposalKind.FORBIDDEN_CLAUSE:
            return f"forbid {self.clause.render()}"
        return f"restrict {self.parameter} to [{format_value(self.lower)}, {format_value(self.upper)}]"


# ============================================================================
# SCANNING
# ============================================================================

def crash_scan(
    scenario: ScenarioSpec,
    space: Optional[ParameterSpace] = None,
    n: int = DEFAULT_SCAN_SIZE,
    seed: int = 0,
    chunk_size: int = 1_000,
    log: Optional[RunLog] = None,
) -> CrashReport:
    """
    Run `n` random configurations on the scenario's canary instance.

    Args:
        scenario: Target and canary instance (first instance unless designated)
        space: Draft space (defaults to the scenario's space file)
        n: Number of configurations to sample
        seed: Seed of the configuration sequence
        chunk_size: Configurations handed to run_batch at a time
        log: Optional run log

    Raises:
        ValueError: n < 1
        HarnessError: a target run could not be started
    """
    if n < 1:
        raise ValueError(f"scan size must be at least 1, got {n}")
    space = space or scenario.load_space()
    config_seed, run_seed = np.random.SeedSequence(seed).spawn(2)
    configs = sample_configurations(space, n, np.random.default_rng(config_seed))
    run_seeds = np.random.default_rng(run_seed).integers(0, 2**31 - 1, size=n)

    report = CrashReport(space=space, canary=scenario.canary, sampled=n)
    for start in range(0, n, chunk_size):
        chunk = [
            RunSpec(config, scenario.canary, int(run_seeds[start + i]))
            for i, config in enumerate(configs[start:start + chunk_size])
        ]
        results = run_batch(scenario, chunk, log=log)
        failed = harness_errors(results)
        if failed:
            raise HarnessError(failed[0].error)
        for result in results:
            if result.outcome == Outcome.CRASH:
                report.crashing.append(result.config)
            else:
                report.non_crashing.append(result.config)
        logger.info("scanned %d/%d configurations, %d crashes", min(start + chunk_size, n), n, len(report.crashing))
    return report


# ============================================================================
# MINING
# ============================================================================

def _fraction(configs: Sequence[Configuration], predicate) -> float:
    if not configs:
        return 0.0
    return sum(1 for c in configs if predicate(c)) / len(configs)


def _categorical_items(space: ParameterSpace, config: Configuration) -> List[Assignment]:
    return sorted(
        (name, value) for name, value in config.items()
        if space[name].kind == DomainKind.CATEGORICAL
    )


def _clause_proposals(report: CrashReport, sample: Sequence[Configuration], default: Configuration,
                      min_support: float, max_false_positive: float) -> List[RefinementProposal]:
    space = report.space
    crashes = report.crashing
    single_counts: Counter = Counter()
    pair_counts: Counter = Counter()
    for config in crashes:
        items = _categorical_items(space, config)
        single_counts.update((item,) for item in items)
        pair_counts.update(combinations(items, 2))

    def matches(assignments):
        return lambda c: all(c.get(name) == value for name, value in assignments)

    proposals: List[RefinementProposal] = []
    emitted_singles: List[FrozenSet[Assignment]] = []
    threshold = math.ceil(min_support * len(crashes) - 1e-9)
    for counts in (single_counts, pair_counts):
        for assignments in sorted(counts):
            if counts[assignments] < threshold:
                continue
            items = frozenset(assignments)
            if any(single <= items for single in emitted_singles):
                continue
            if all(default.get(name) == value for name, value in assignments):
                continue
            false_positive = _fraction(sample, matches(assignments))
            if false_positive > max_false_positive:
                continue
            proposals.append(RefinementProposal(
                kind=ProposalKind.FORBIDDEN_CLAUSE,
                support=counts[assignments] / len(crashes),
                false_positive=false_positive,
                clause=ForbiddenClause(tuple(assignments)),
            ))
            if len(assignments) == 1:
                emitted_singles.append(items)
    return proposals


def _best_cut(param: Parameter, crash_values: List[float], sample_values: List[float], n_crashes: int,
              n_sample: int, default: float, upper: bool, max_false_positive: float):
    """Best threshold excluding the crash-heavy end of a numeric range, or None."""
    best = None
    for cut in sorted(set(crash_values), reverse=not upper):
        if (upper and default >= cut) or (not upper and default <= cut):
            continue
        excluded = (lambda v: v >= cut) if upper else (lambda v: v <= cut)
        support = sum(1 for v in crash_values if excluded(v)) / n_crashes
        false_positive = (sum(1 for v in sample_values if excluded(v)) / n_sample) if n_sample else 0.0
        if false_positive > max_false_positive:
            continue
        key = (support, -false_positive)
        if best is None or key > best[0]:
            best = (key, cut, support, false_positive)
    if best is None:
        return None
    _, cut, support, false_positive = best
    kept = [v for v in sample_values if (v < cut if upper else v > cut)]
    if param.kind == DomainKind.INTEGER:
        bound = cut - 1 if upper else cut + 1
    elif upper:
        bound = max(kept + [default])
    else:
        bound = min(kept + [default])
    return bound, support, false_positive


def _reduction_proposals(report: CrashReport, sample: Sequence[Configuration], default: Configuration,
                         min_support: float, max_false_positive: float) -> List[RefinementProposal]:
    space = report.space
    proposals = []
    for param in space.parameters:
        if not param.is_numeric or param.name not in default:
            continue
        crash_values = [c[param.name] for c in report.crashing if param.name in c]
        if not crash_values:
            continue
        sample_values = [c[param.name] for c in sample if param.name in c]
        for upper in (True, False):
            cut = _best_cut(param, crash_values, sample_values, len(report.crashing), len(sample),
                            default[param.name], upper, max_false_positive)
            if cut is None:
                continue
            bound, support, false_positive = cut
            if support < min_support:
                continue
            lower, higher = (param.lower, bound) if upper else (bound, param.upper)
            if lower > higher:
                continue
            if param.kind == DomainKind.INTEGER:
                lower, higher = int(lower), int(higher)
            proposals.append(RefinementProposal(
                kind=ProposalKind.DOMAIN_REDUCTION,
                support=support,
                false_positive=false_positive,
                parameter=param.name,
                lower=lower,
                upper=higher,
            ))
    return proposals


def propose_refinements(
    report: CrashReport,
    non_crashing: Optional[Sequence[Configuration]] = None,
    min_support: float = MIN_SUPPORT,
    max_false_positive: float = MAX_FALSE_POSITIVE,
) -> List[RefinementProposal]:
    """
    Mine a crash report for forbidden clauses and numeric range reductions.

    Support is the fraction of crashing configurations a proposal excludes;
    the false-positive estimate is the fraction of the non-crashing sample it
    would also exclude. Proposals that would exclude the default
    configuration are never emitted.

    Args:
        report: Crash scan result with at least one crash
        non_crashing: Sample of non-crashing configurations (defaults to the report's)
        min_support: Minimum support for a proposal
        max_false_positive: Maximum false-positive estimate for a proposal

    Returns:
        Proposals ranked by support (descending), then false positives (ascending)

    Raises:
        RefinementError: the report has no crashes
    """
    if not report.crashing:
        raise RefinementError("crash report contains no crashes; nothing to refine")
    sample = list(non_crashing) if non_crashing is not None else report.non_crashing
    default = default_config(report.space)
    proposals = _clause_proposals(report, sample, default, min_support, max_false_positive)
    proposals += _reduction_proposals(report, sample, default, min_support, max_false_positive)
    proposals.sort(key=lambda p: (-p.support, p.false_positive, p.describe()))
    logger.info("%d refinement proposals from %d crashes", len(proposals), len(report.crashing))
    return proposals


# ============================================================================
# APPLYING
# ============================================================================

def _reduced(param: Parameter, lower: float, upper: float) -> Parameter:
    return Parameter(param.name, param.kind, param.default, lower=lower, upper=upper, log=param.log)


def apply_refinements(space: ParameterSpace, proposals: Sequence[RefinementProposal]) -> ParameterSpace:
    """
    New space with the proposals applied in order.

    A proposal that would make the space invalid (for example a condition
    value outside a reduced range) is skipped with a warning.
    """
    parameters: Dict[str, Parameter] = {p.name: p for p in space.parameters}
    forbidden = list(space.forbidden)
    current = space
    for proposal in proposals:
        trial_parameters = dict(parameters)
        trial_forbidden = list(forbidden)
        try:
            if proposal.kind == ProposalKind.FORBIDDEN_CLAUSE:
                if proposal.clause in trial_forbidden:
                    continue
                trial_forbidden.append(proposal.clause)
            else:
                param = trial_parameters[proposal.parameter]
                trial_parameters[proposal.parameter] = _reduced(param, proposal.lower, proposal.upper)
            current = ParameterSpace(trial_parameters.values(), space.conditions, trial_forbidden)
        except SpaceError as e:
            logger.warning("skipping proposal '%s': %s", proposal.describe(), e)
            continue
        parameters, forbidden = trial_parameters, trial_forbidden
    return current


def render_proposals(report: CrashReport, proposals: Sequence[RefinementProposal]) -> str:
    """Human-readable scan summary and proposal list."""
    lines = [
        f"Crash scan on {report.canary}",
        f"  sampled: {report.sampled}",
        f"  crashes: {len(report.crashing)} ({100 * report.crash_rate:.2f}%)",
        "",
    ]
    if not proposals:
        lines.append("No proposals meet the support and false-positive thresholds.")
    for rank, proposal in enumerate(proposals, start=1):
        lines.append(
            f"{rank:>3}. {proposal.describe():<60} support {proposal.support:.3f}  "
            f"false-positive {proposal.false_positive:.3f}"
        )
    return "\n".join(lines) + "\n"
