"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 scenario/parse error,
3 a submission was rejected by authentication, 4 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import auth
from .pipeline import ALGORITHMS, compare_algorithms, run_pipeline
from .report import compare_report, run_report
from .scenario import (
    Scenario,
    ScenarioError,
    default_keydir,
    generate_jobs,
    load_keys,
    load_scenario,
    workload_user,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_AUTH = 3
EXIT_INTERNAL = 4

DEFAULT_JOB_COUNTS = (3, 5, 8, 10, 14)

log = logging.getLogger("gridforge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _job_counts(text: str) -> list[int]:
    try:
        counts = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not counts or any(c < 0 for c in counts):
        raise argparse.ArgumentTypeError("job counts must be non-negative integers")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridforge", description="Secure job-grouping grid scheduling simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(p):
        p.add_argument("--scenario", required=True,
                       help="scenario file, or builtin:paper-r16")
        p.add_argument("--granularity", type=float, help="granularity size in seconds")
        p.add_argument("--tcomm", type=float, help="communication allowance per group in seconds")
        p.add_argument("--overhead", type=float, help="per-group dispatch overhead in seconds")
        p.add_argument("--keydir", type=Path, default=default_keydir(),
                       help="directory holding user key files (env GRIDFORGE_KEYDIR)")
        p.add_argument("--out", type=Path, help="output CSV path (default: stdout)")

    run = sub.add_parser("run", help="run one algorithm and write the per-group report")
    scenario_args(run)
    run.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="srjm")
    run.add_argument("--generate-jobs", type=int, metavar="N",
                     help="replace the scenario's jobs with N generated jobs")

    cmp_ = sub.add_parser("compare", help="compare SRJM and DJG over job-count levels")
    scenario_args(cmp_)
    cmp_.add_argument("--job-counts", type=_job_counts, default=list(DEFAULT_JOB_COUNTS),
                      help="comma-separated job counts (default 3,5,8,10,14)")

    keygen = sub.add_parser("keygen", help="write <name>.priv and <name>.pub")
    keygen.add_argument("name")
    keygen.add_argument("bits", nargs="?", type=int, default=auth.DEFAULT_BITS)
    keygen.add_argument("--keydir", type=Path, default=default_keydir())
    keygen.add_argument("--force", action="store_true", help="overwrite existing key files")
    return parser


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    changes = {}
    if args.granularity is not None:
        changes["granularity_s"] = args.granularity
    if args.tcomm is not None:
        changes["tcomm_s"] = args.tcomm
    if args.overhead is not None:
        changes["overhead_s"] = args.overhead
    if not changes:
        return scenario
    scenario = replace(scenario, **changes)
    scenario.validate()
    return scenario


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="\n")


def cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    if args.generate_jobs is not None:
        scenario = scenario.with_jobs(generate_jobs(args.generate_jobs, workload_user(scenario)))
    keys = load_keys(scenario, args.keydir)
    result = run_pipeline(scenario, args.algorithm, keys)
    _emit(run_report(result), args.out)
    for r in result.rejected:
        log.warning("rejected %s from %s: %s", r.job_id, r.user, r.reason)
    return EXIT_AUTH if result.auth_rejections else EXIT_OK


def cmd_compare(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    keys = load_keys(scenario, args.keydir)
    user = workload_user(scenario)
    levels = [
        compare_algorithms(scenario.with_jobs(generate_jobs(n, user)), keys)
        for n in args.job_counts
    ]
    _emit(compare_report(levels), args.out)
    return EXIT_OK


def cmd_keygen(args) -> int:
    keydir = args.keydir if args.keydir is not None else Path.cwd()
    try:
        keypair = auth.generate_keypair(args.bits)
    except auth.AuthError as exc:
        raise UsageError(str(exc)) from None
    try:
        priv, pub = auth.write_keypair(keydir, args.name, keypair, force=args.force)
    except FileExistsError as exc:
        raise UsageError(str(exc)) from None
    print(f"wrote {priv} and {pub}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "keygen": cmd_keygen}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"gridforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"gridforge: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except OSError as exc:
        print(f"gridforge: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
