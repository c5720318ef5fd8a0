"""
RAG temperature x perturbation robustness benchmark
Main entry point for the command-line harness
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.config import RunConfig, load_config
from src.data_classes import ItemStatus, Metric
from src.errors import (
    ConfigError,
    DatasetNotFound,
    HarnessError,
    InsufficientCell,
    ManifestMismatch,
    MissingLexicon,
    MissingPrefix,
    ParseError,
    SchemaError,
)
from src.pipeline import (
    REFERENCES_FILE,
    BenchmarkRunner,
    expand_conditions,
    load_references,
    load_scores,
    resume,
    run_benchmark,
)
from src.utils import setup_logging

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_FAILURES = 2

FATAL_ERRORS = (
    ConfigError,
    DatasetNotFound,
    ParseError,
    SchemaError,
    InsufficientCell,
    ManifestMismatch,
    MissingLexicon,
    MissingPrefix,
)


def cmd_sample(config: RunConfig, args: argparse.Namespace) -> int:
    samples = BenchmarkRunner(config).sample()
    print(f"sampled {len(samples)} questions")
    return EXIT_OK


def cmd_perturb(config: RunConfig, args: argparse.Namespace) -> int:
    runner = BenchmarkRunner(config)
    perturbed, failures = runner.perturb(runner.load_samples())
    print(f"perturbed {len(perturbed)} (sample, kind) pairs, {len(failures)} failed")
    return EXIT_FAILURES if failures else EXIT_OK


def cmd_refprep(config: RunConfig, args: argparse.Namespace) -> int:
    runner = BenchmarkRunner(config)
    references, failures = runner.refprep(runner.load_samples())
    print(f"{len(references)} references ready, {len(failures)} failed")
    return EXIT_FAILURES if failures else EXIT_OK


def cmd_run(config: RunConfig, args: argparse.Namespace) -> int:
    if args.dry_run:
        samples = BenchmarkRunner(config).load_samples() if config.dataset else []
        groups, items = expand_conditions(config, samples)
        print(f"condition groups: {groups}")
        print(f"work items: {len(items)} ({len(samples)} samples x {config.runs_per_condition} runs)")
        return EXIT_OK

    if args.resume:
        manifest = resume(args.resume, config, limit=args.limit)
    else:
        manifest = run_benchmark(config, limit=args.limit)

    done = manifest.count(ItemStatus.DONE)
    failed = manifest.count(ItemStatus.FAILED)
    pending = manifest.count(ItemStatus.PENDING)
    print(f"done {done}, failed {failed}, pending {pending}")
    return EXIT_FAILURES if failed or manifest.errors else EXIT_OK


def cmd_score(config: RunConfig, args: argparse.Namespace) -> int:
    runner = BenchmarkRunner(config)
    _, items = expand_conditions(config, runner.load_samples())
    references = load_references(runner.path(REFERENCES_FILE))
    records = runner.score(items, references)
    print(f"{len(records)} score rows")
    return EXIT_OK


def cmd_stats(config: RunConfig, args: argparse.Namespace) -> int:
    run_stats, condition_stats, baselines = BenchmarkRunner(config).stats(load_scores(config))
    print(f"{len(run_stats)} per-sample rows, {len(condition_stats)} condition rows, {len(baselines)} baselines")
    return EXIT_OK


def cmd_report(config: RunConfig, args: argparse.Namespace) -> int:
    runner = BenchmarkRunner(config)
    records = load_scores(config)
    run_stats, condition_stats, baselines = runner.stats(records)
    written = runner.report(records, run_stats, condition_stats, baselines, allow_gaps=args.allow_gaps)
    print(f"{len(written)} artifacts written to {runner.out_dir}")
    return EXIT_OK


def cmd_fragile(config: RunConfig, args: argparse.Namespace) -> int:
    runner = BenchmarkRunner(config)
    records = load_scores(config)
    run_stats, _, _ = runner.stats(records)
    metric = Metric(args.metric) if args.metric else runner.report_metric(records)
    if metric is None:
        print("no scores to analyse")
        return EXIT_FAILURES
    df = runner.fragile(run_stats, metric)
    print(df.to_string(index=False) if len(df) else "no comparable pairs")
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "perturb": cmd_perturb,
    "refprep": cmd_refprep,
    "run": cmd_run,
    "score": cmd_score,
    "stats": cmd_stats,
    "report": cmd_report,
    "fragile": cmd_fragile,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--mock", action="store_true", help="use the offline mock backend")
    common.add_argument("--out", help="output directory")
    common.add_argument("--strict", action="store_true", help="reject invalid dataset records")
    common.add_argument("--concurrency", type=int, help="maximum in-flight requests")
    common.add_argument("--log-level", default="INFO")

    parser = argparse.ArgumentParser(description="Temperature x perturbation robustness benchmark for RAG")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="draw the stratified sample")
    sub.add_parser("perturb", parents=[common], help="emit perturbed contexts")
    sub.add_parser("refprep", parents=[common], help="build sentence-form references")

    run = sub.add_parser("run", parents=[common], help="run the benchmark")
    run.add_argument("--resume", metavar="MANIFEST", help="continue from a run manifest")
    run.add_argument("--limit", type=int, help="stop after N work items")
    run.add_argument("--dry-run", action="store_true", help="print condition counts only")

    sub.add_parser("score", parents=[common], help="score journaled generations")
    sub.add_parser("stats", parents=[common], help="aggregate scores.csv")
    report = sub.add_parser("report", parents=[common], help="tables and figures")
    report.add_argument("--allow-gaps", action="store_true", help="draw figures with missing points")
    fragile = sub.add_parser("fragile", parents=[common], help="largest Original-to-perturbed gaps")
    fragile.add_argument("--metric", choices=[m.value for m in Metric])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level.upper())
    try:
        config = load_config(args.config).with_overrides(
            mock=True if args.mock else None,
            output_dir=args.out,
            strict=True if args.strict else None,
            concurrency=args.concurrency,
        )
        return COMMANDS[args.command](config, args)
    except FATAL_ERRORS as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FATAL
    except HarnessError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
