# -*- coding: utf-8 -*-
# pylint: disable=W0718
"""
Command-line entry point.

    proxlast run --config configs/lasso_spgd.env --out out/
    proxlast compare --config configs/compare_lasso.env --out out/
    proxlast verify --scope alpha

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Logging goes to stderr, the summary table to stdout, and every report file is
written atomically under --out together with a run manifest.

The master seed is resolved as --seed, then PROXLAST_SEED, then the config's
master_seed.
"""

# python stuff
import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from typing import List, Optional

# 3rd party stuff
import pandas as pd
from pydantic import BaseModel, ConfigDict

# our stuff
from proxlast.bench import compare_last_vs_avg, load_experiment_spec, run_experiment
from proxlast.conf import settings
from proxlast.const import (
    COMPARISON_CSV,
    COMPARISON_JSON,
    MANIFEST_JSON,
    MODULE_NAME,
    REPORT_CSV,
    REPORT_JSON,
    VERIFY_JSON,
)
from proxlast.exceptions import EXIT_CODE_MAP, ProxLastVerificationError
from proxlast.utils import atomic_write_text, exception_report, stable_digest, to_json
from proxlast.verify import SCOPES, run_verification


logger = logging.getLogger(__name__)

# vanity stuff to reduce the verbosity of worker pool shutdown noise
concurrent_logger = logging.getLogger("concurrent.futures")
concurrent_logger.setLevel(logging.CRITICAL)

DEFAULT_OUT = "proxlast_out"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunManifest(BaseModel):
    """What was run, from which config, and where its outputs went."""

    model_config = ConfigDict(frozen=True)

    subcommand: str
    config_path: Optional[str] = None
    config_digest: str
    output_dir: str
    timestamp: str
    seed: Optional[int] = None
    outputs: List[str] = []
    settings: dict = {}


def setup_logging(verbose: bool = False) -> None:
    """Route all log records to stderr. stdout is reserved for the summary table."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        force=True,
    )


def exit_code_for(exception: BaseException) -> int:
    """Exit code of an exception, looked up along its class hierarchy."""
    for cls in type(exception).__mro__:
        if cls in EXIT_CODE_MAP:
            return EXIT_CODE_MAP[cls][0]
    return EXIT_CODE_MAP[Exception][0]


def resolve_seed(cli_seed: Optional[int]) -> Optional[int]:
    """--seed wins over PROXLAST_SEED; None leaves the config's master_seed in place."""
    if cli_seed is not None:
        return cli_seed
    return settings.seed


def write_manifest(args, config_digest: str, seed: Optional[int], outputs: List[str]) -> str:
    """Write manifest.json next to the reports."""
    manifest = RunManifest(
        subcommand=args.command,
        config_path=os.path.abspath(args.config) if getattr(args, "config", None) else None,
        config_digest=config_digest,
        output_dir=os.path.abspath(args.out),
        timestamp=datetime.now(timezone.utc).isoformat(),
        seed=seed,
        outputs=outputs,
        settings=settings.dump,
    )
    return atomic_write_text(os.path.join(args.out, MANIFEST_JSON), to_json(manifest.model_dump()))


def print_table(frame: pd.DataFrame) -> None:
    """Summary table to stdout."""
    print(frame.to_string(index=False))


def _dry_run(spec) -> int:
    print(to_json({"digest": spec.digest, "config": spec.model_dump()}))
    return 0


def cmd_run(args) -> int:
    """Run a convergence-rate experiment and write the rate report."""
    seed = resolve_seed(args.seed)
    spec = load_experiment_spec(args.config, seed_override=seed)
    if args.dry_run:
        return _dry_run(spec)

    report = run_experiment(spec, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    outputs = [
        report.to_csv(os.path.join(args.out, REPORT_CSV)),
        atomic_write_text(os.path.join(args.out, REPORT_JSON), report.to_json()),
    ]
    write_manifest(args, spec.digest, spec.master_seed, outputs)

    print_table(report.summary_frame())
    if report.slope is not None:
        print(f"slope {report.slope:.3f}  ci {report.slope_ci}")
    for warning in report.warnings:
        logger.warning(warning)
    return 0


def cmd_compare(args) -> int:
    """Compare last-iterate and averaged-iterate gaps at the largest T."""
    seed = resolve_seed(args.seed)
    spec = load_experiment_spec(args.config, seed_override=seed)
    if args.dry_run:
        return _dry_run(spec)

    comparison = compare_last_vs_avg(spec, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    outputs = [
        comparison.to_csv(os.path.join(args.out, COMPARISON_CSV)),
        atomic_write_text(os.path.join(args.out, COMPARISON_JSON), comparison.to_json()),
    ]
    write_manifest(args, spec.digest, spec.master_seed, outputs)

    print_table(comparison.to_frame())
    print(f"last iterate wins {comparison.wins}/{comparison.trials} at T={comparison.T}")
    if comparison.trials < spec.trials:
        logger.warning("%d of %d trials diverged", spec.trials - comparison.trials, spec.trials)
    return 0


def cmd_verify(args) -> int:
    """Run the invariant grids of a scope. Raises ProxLastVerificationError on any failed cell."""
    seed = resolve_seed(args.seed)
    seed = 0 if seed is None else seed
    if args.dry_run:
        print(to_json({"scope": args.scope, "seed": seed, "jobs": args.jobs}))
        return 0

    report = run_verification(scope=args.scope, jobs=args.jobs, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    outputs = [atomic_write_text(os.path.join(args.out, VERIFY_JSON), report.to_json())]
    write_manifest(args, stable_digest({"scope": args.scope, "seed": seed}), seed, outputs)

    counts = report.counts()
    print_table(
        pd.DataFrame(
            [{"check": check, "passed": entry["passed"], "total": entry["total"]} for check, entry in counts.items()]
        )
    )
    if not report.passed:
        raise ProxLastVerificationError(
            "failed cells: " + ", ".join(report.failed_cells), failed_cells=report.failed_cells
        )
    return 0


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    """argparse layout of the three subcommands."""
    parser = argparse.ArgumentParser(prog=MODULE_NAME, description="Last-iterate stochastic proximal experiments.")
    parser.add_argument("--version", action="version", version=settings.version)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=DEFAULT_OUT, help="output directory")
    common.add_argument("--jobs", type=int, default=settings.jobs, help="worker processes")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "convergence-rate experiment"), ("compare", "last vs averaged iterate")):
        sub = subparsers.add_parser(name, parents=[common], help=helptext)
        sub.add_argument("--config", required=True, help="experiment file (KEY=value lines)")
    verify = subparsers.add_parser("verify", parents=[common], help="invariant checks")
    verify.add_argument("--scope", choices=SCOPES + ("all",), default="all")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, dispatch and map exceptions to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    setup_logging(args.verbose)
    if args.jobs < 1:
        logger.error("--jobs must be at least 1, got %d", args.jobs)
        return 2
    try:
        return COMMANDS[args.command](args)
    except ProxLastVerificationError as e:
        logger.error(e.message)
        return exit_code_for(e)
    except Exception as e:
        code = exit_code_for(e)
        logger.error("%s: %s", type(e).__name__, getattr(e, "message", str(e)))
        if code != 2:
            logger.debug(exception_report(e)["description"])
        return code


if __name__ == "__main__":
    sys.exit(main())
