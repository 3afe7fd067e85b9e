"""
Command-line entry point for flagtune.

Verbs:
  space check|sample   inspect or sample a space file
  scan                 crash-scan the scenario's space and propose refinements
  tune                 run a configuration campaign
  validate             validate configurations against the default
  rank                 rank configurations from a validation run log
  ablate               ablation path from the default to a configuration
  plot-data            write ECDF, scatter or trajectory data

Exit status: 0 on success, 1 on usage error, 2 on harness error.

Example usage:
    python app.py --scenario data/scenarios/v8_partial.json --out out/tune --seed 1 tune --runs 3 --budget 200
    python app.py --scenario data/scenarios/v8_partial.json --out out/val validate out/tune/run-00/incumbent.cfg
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src import settings
from src.ablation import DEFAULT_RUNS_PER_EVAL
from src.refine import DEFAULT_SCAN_SIZE, MAX_FALSE_POSITIVE, MIN_SUPPORT
from src.reporting.plot_data import PLOT_KINDS
from src.reporting.validation import DEFAULT_VALIDATION_RUNS
from src.tools import tuning_tools

# Load environment variables (system env vars win)
load_dotenv(override=False)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HARNESS = 2

logger = logging.getLogger("flagtune")


class UsageError(Exception):
    """Raised by the parser instead of exiting, so usage errors map to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flagtune", description="Automated parameter configuration of command-line executables.")
    parser.add_argument("--scenario", help="scenario JSON file")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default: the scenario's seed; 0 for space verbs)")
    parser.add_argument("--jobs", type=int, default=None, help="concurrency limit for target runs")
    parser.add_argument("--out", default="out", help="output directory (default ./out)")
    parser.add_argument("--json", action="store_true", help="print the full result as JSON")
    verbs = parser.add_subparsers(dest="verb", parser_class=_Parser)
    verbs.required = True

    space = verbs.add_parser("space", help="inspect a space file")
    space_verbs = space.add_subparsers(dest="space_verb", parser_class=_Parser)
    space_verbs.required = True
    check = space_verbs.add_parser("check", help="parse and summarize a space file")
    check.add_argument("space_file")
    sample = space_verbs.add_parser("sample", help="draw random configurations")
    sample.add_argument("space_file")
    sample.add_argument("-n", type=int, default=10)
    export = space_verbs.add_parser("export", help="write the space in pcs_new format")
    export.add_argument("space_file")

    scan = verbs.add_parser("scan", help="crash-scan the space and propose refinements")
    scan.add_argument("-n", type=int, default=DEFAULT_SCAN_SIZE)
    scan.add_argument("--min-support", type=float, default=MIN_SUPPORT)
    scan.add_argument("--max-false-positive", type=float, default=MAX_FALSE_POSITIVE)

    tune = verbs.add_parser("tune", help="run a configuration campaign")
    tune.add_argument("--runs", type=int, default=25, help="independent configurator runs")
    tune.add_argument("--method", choices=["smbo", "random"], default="smbo")
    tune.add_argument("--budget", type=int, default=None, help="target runs per configurator run")
    tune.add_argument("--validate", type=int, default=None, metavar="RUNS",
                      help="validate incumbents with RUNS runs per instance")
    tune.add_argument("--parallel-runs", type=int, default=1)

    validate = verbs.add_parser("validate", help="validate configurations against the default")
    validate.add_argument("configs", nargs="*", help="configuration files")
    validate.add_argument("--runs", type=int, default=DEFAULT_VALIDATION_RUNS, help="runs per instance")
    validate.add_argument("--load", type=int, action="append", default=[], help="load level (repeatable)")

    rank = verbs.add_parser("rank", help="rank configurations from a validation run log")
    rank.add_argument("log_file")
    rank.add_argument("--top", type=int, default=10)

    ablate = verbs.add_parser("ablate", help="ablation path from the default to a configuration")
    ablate.add_argument("target_file")
    ablate.add_argument("--runs", type=int, default=DEFAULT_RUNS_PER_EVAL, help="runs per instance per evaluation")
    ablate.add_argument("--instance", action="append", default=[], help="restrict to instance (repeatable)")
    ablate.add_argument("--top", type=int, default=None)

    plot = verbs.add_parser("plot-data", help="write plot data")
    plot.add_argument("kind", choices=PLOT_KINDS)
    plot.add_argument("--log", dest="log_file", help="validation run log (ecdf, scatter)")
    plot.add_argument("--config-id", help="configured side of the scatter")
    plot.add_argument("--campaign-dir", help="campaign output directory (trajectory)")
    return parser


def _require_scenario(args) -> str:
    if not args.scenario:
        raise UsageError(f"flagtune {args.verb}: --scenario is required")
    return args.scenario


def dispatch(args) -> Dict[str, Any]:
    """Call the tool function behind a parsed command line."""
    if args.verb == "space":
        if args.space_verb == "check":
            return tuning_tools.check_space(args.space_file)
        if args.space_verb == "export":
            return tuning_tools.export_space(args.space_file, args.out)
        return tuning_tools.sample_space(args.space_file, args.n, args.seed or 0, args.out)
    scenario = _require_scenario(args)
    if args.verb == "scan":
        return tuning_tools.scan_space(scenario, args.n, args.seed, args.jobs, args.out,
                                       args.min_support, args.max_false_positive)
    if args.verb == "tune":
        return tuning_tools.tune(scenario, args.runs, args.seed, args.jobs, args.out, args.method,
                                 args.budget, args.validate, args.parallel_runs)
    if args.verb == "validate":
        return tuning_tools.validate(scenario, args.configs, args.runs, args.load, args.seed, args.jobs, args.out)
    if args.verb == "rank":
        return tuning_tools.rank(scenario, args.log_file, args.top, args.out)
    if args.verb == "ablate":
        return tuning_tools.ablate(scenario, args.target_file, args.runs, args.seed, args.jobs, args.out,
                                   args.instance, args.top)
    return tuning_tools.plot_data(scenario, args.kind, args.out, args.log_file, args.config_id, args.campaign_dir)


def _percent(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}%"


def _summary_lines(verb: str, result: Dict[str, Any]) -> List[str]:
    if verb == "space":
        if "configurations" in result:
            return result["configurations"]
        if "exported" in result:
            return [f"✓ pcs_new space: {result['exported']}"]
        return [f"✓ {result['parameters']} parameters, {result['conditions']} conditions, "
                f"{result['forbidden']} forbidden clauses (fingerprint {result['fingerprint']})"]
    if verb == "scan":
        lines = [f"✓ {result['crashes']}/{result['sampled']} configurations crashed"]
        lines += [f"  {p['proposal']} (support {p['support']:.2f})" for p in result["proposals"]]
        lines.append(f"✓ refined space: {result['refined_space']}")
        return lines
    if verb == "tune":
        return [f"✓ best training incumbent {result['best_training_id']} "
                f"(PAR {result['best_training_par_k']:.4f}, {result['failed_runs']} failed runs)"]
    if verb == "validate":
        return [f"✓ load {t['load_tag']}: {r['config_id']} PAR {r['par_k']:.4f} ({_percent(r['rel_impr_pct'])})"
                for t in result["tables"] for r in t["rows"]]
    if verb == "rank":
        return [f"{e['rank']:>3}. {e['config_id']}  {e['score']:.4f}  (default {e['default_score']:.4f})"
                for e in result["ranking"]]
    if verb == "ablate":
        return [f"{s['round']:>3}. {s['parameter']}: {s['from']} -> {s['to']}  {s['portion']:.2f}%"
                for s in result["steps"]]
    return [f"✓ {result['kind']} data: {result['file']}"]


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("flagtune: --jobs must be at least 1")
        result = dispatch(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    if args.json:
        print(tuning_tools.dump_json(result))
    elif result.get("success"):
        print("\n".join(_summary_lines(args.verb, result)))

    if result.get("success"):
        return EXIT_OK
    print(f"✗ {result.get('error', 'failed')}", file=sys.stderr)
    return EXIT_HARNESS if result.get("error_kind") == "harness" else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
