"""Command-line interface.

Subcommands
-----------
run        convergence study for every configured scheme
verify     structural checks: ordered-product bound ensemble, split-product
           lifting, composition law, contraction
constants  perturbation/smoothing constants for the configured model
report     re-emit a stored JSONL record stream in another format

Exit codes: 0 success, 1 validation failure, 2 numerical-accuracy failure,
3 I/O failure.  JSONL output is byte-identical for a fixed configuration and
seed; wall-clock timings only ever go to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    lemma21_ensemble,
    run_convergence,
    verify_cocycle,
    verify_contraction,
    verify_lifting,
)
from .config import ExperimentConfig, build_model, parse_config
from .constants import estimate_constants
from .errors import AccuracyError, ConfigError, ValidationError
from .propagator import Scheme
from .reports import (
    ReportEnvelope,
    cocycle_record,
    constants_record,
    contraction_record,
    convergence_record,
    failure_record,
    lemma21_record,
    lifting_record,
    meta_record,
    read_jsonl,
)

__all__ = ["main"]

log = logging.getLogger("gibbsflow")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ACCURACY = 2
EXIT_IO = 3

THREADS_ENV = "GIBBSFLOW_THREADS"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsflow",
        description="Product-formula approximation of non-autonomous "
                    "Gibbs semiflows: convergence studies and bound checks.",
    )
    parser.add_argument("--version", action="version", version=f"gibbsflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        if needs_config:
            p.add_argument("--config", required=True, metavar="PATH",
                           help="YAML experiment configuration")
            p.add_argument("--seed", type=int, default=None,
                           help="override the configured seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default: ${THREADS_ENV} or 1)")
        p.add_argument("--output", default=None, metavar="PATH",
                       help="output path ('-' for stdout; default from config)")
        p.add_argument("--format", default=None, choices=("csv", "jsonl", "plot"),
                       help="output format (default from config)")
        p.add_argument("--verbose", action="store_true",
                       help="progress and timings on stderr")

    common(sub.add_parser("run", help="run the configured convergence study"))
    common(sub.add_parser("verify", help="run the structural check suites"))
    common(sub.add_parser("constants", help="report the model constants"))

    rep = sub.add_parser("report", help="re-emit stored JSONL records")
    rep.add_argument("input", metavar="PATH", help="stored JSONL stream ('-' for stdin)")
    common(rep, needs_config=False)
    return parser


def _thread_count(args: argparse.Namespace) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ValidationError(f"--threads must be >= 1, got {args.threads}")
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValidationError(f"${THREADS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise ValidationError(f"${THREADS_ENV} must be >= 1, got {value}")
        return value
    return 1


def _fan_out(jobs: Sequence[Callable[[], dict]], threads: int) -> list:
    """Run independent record jobs, preserving submission order."""
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config == "-":
        text = sys.stdin.read()
    else:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    config = parse_config(text)
    if args.seed is not None:
        if args.seed < 0:
            raise ValidationError(f"--seed must be >= 0, got {args.seed}")
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _emit(envelope: ReportEnvelope, path: str, fmt: str) -> None:
    if path == "-":
        envelope.write(sys.stdout, fmt)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        envelope.write(handle, fmt)
    log.info("wrote %d records to %s (%s)", len(envelope.records), path, fmt)


def _timed(label: str, fn: Callable[[], dict]) -> Callable[[], dict]:
    def job() -> dict:
        start = time.perf_counter()
        record = fn()
        log.info("%s finished in %.3fs", label, time.perf_counter() - start)
        return record

    return job


def _cmd_run(config: ExperimentConfig, threads: int) -> tuple[ReportEnvelope, int]:
    model = build_model(config)
    envelope = ReportEnvelope()
    envelope.add(meta_record(config.to_dict(), config.seed))
    envelope.add(constants_record(estimate_constants(model, config.s, config.t,
                                                     grid=config.grid)))

    def convergence_job(scheme_name: str) -> Callable[[], dict]:
        def fn() -> dict:
            report = run_convergence(
                model, Scheme(scheme_name), config.s, config.t, config.n_list,
                tol_ref=config.tol_ref, slack=config.slack,
            )
            return convergence_record(report)

        return _timed(f"convergence[{scheme_name}]", fn)

    jobs = [convergence_job(name) for name in config.schemes]
    results, exit_code = _run_jobs(jobs, [f"run:{n}" for n in config.schemes], threads)
    for record in results:
        envelope.add(record)
    return envelope, exit_code


def _run_jobs(jobs: Sequence[Callable[[], dict]], stages: Sequence[str],
              threads: int) -> tuple[list, int]:
    """Execute jobs; a failing job degrades to a failure record."""
    exit_code = EXIT_OK

    def guarded(job: Callable[[], dict], stage: str) -> Callable[[], dict]:
        def fn() -> dict:
            try:
                return job()
            except AccuracyError as exc:
                return failure_record(stage, exc)
            except ValidationError as exc:
                return failure_record(stage, exc)

        return fn

    records = _fan_out([guarded(j, s) for j, s in zip(jobs, stages)], threads)
    for record in records:
        if record.get("kind") == "failure":
            code = (EXIT_ACCURACY if record["error"] == "AccuracyError"
                    else EXIT_VALIDATION)
            exit_code = max(exit_code, code)
            log.error("stage %s failed: %s", record["stage"],
                      "; ".join(record["messages"]))
    return records, exit_code


def _cmd_verify(config: ExperimentConfig, threads: int) -> tuple[ReportEnvelope, int]:
    model = build_model(config)
    envelope = ReportEnvelope()
    envelope.add(meta_record(config.to_dict(), config.seed))
    spec = config.verify
    jobs: list[Callable[[], dict]] = []
    stages: list[str] = []

    jobs.append(_timed("lemma21", lambda: lemma21_record(
        lemma21_ensemble(spec.lemma_instances, seed=config.seed,
                         dim_max=spec.dim_max))))
    stages.append("lemma21")

    for scheme_name in config.schemes:
        for n in spec.lifting_ns:
            jobs.append(_timed(
                f"lifting[{scheme_name}, n={n}]",
                lambda sn=scheme_name, nn=n: lifting_record(
                    verify_lifting(model, Scheme(sn), config.s, config.t, nn,
                                   tol_ref=config.tol_ref))))
            stages.append(f"lifting:{scheme_name}:n={n}")

    rng = np.random.default_rng(config.seed)
    for i in range(spec.cocycle_triples):
        r = config.s + (0.2 + 0.6 * float(rng.random())) * (config.t - config.s)
        jobs.append(_timed(
            f"cocycle[{i}]",
            lambda rr=r: cocycle_record(
                verify_cocycle(model, config.s, rr, config.t,
                               tol_ref=config.tol_ref))))
        stages.append(f"cocycle:{i}")

    for scheme_name in config.schemes:
        for n in spec.contraction_ns:
            jobs.append(_timed(
                f"contraction[{scheme_name}, n={n}]",
                lambda sn=scheme_name, nn=n: contraction_record(
                    verify_contraction(model, Scheme(sn), config.s, config.t, nn))))
            stages.append(f"contraction:{scheme_name}:n={n}")

    records, exit_code = _run_jobs(jobs, stages, threads)
    for record in records:
        envelope.add(record)
    return envelope, exit_code


def _cmd_constants(config: ExperimentConfig, threads: int) -> tuple[ReportEnvelope, int]:
    model = build_model(config)
    envelope = ReportEnvelope()
    envelope.add(meta_record(config.to_dict(), config.seed))
    envelope.add(constants_record(estimate_constants(model, config.s, config.t,
                                                     grid=config.grid)))
    return envelope, EXIT_OK


def _cmd_report(args: argparse.Namespace) -> tuple[ReportEnvelope, int]:
    if args.input == "-":
        records = read_jsonl(sys.stdin)
    else:
        with open(args.input, "r", encoding="utf-8") as handle:
            records = read_jsonl(handle)
    envelope = ReportEnvelope()
    for record in records:
        envelope.add(record)
    return envelope, EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        threads = _thread_count(args)
        if args.command == "report":
            envelope, exit_code = _cmd_report(args)
            fmt = args.format or "jsonl"
            path = args.output or "-"
        else:
            config = _load_config(args)
            command = {"run": _cmd_run, "verify": _cmd_verify,
                       "constants": _cmd_constants}[args.command]
            start = time.perf_counter()
            envelope, exit_code = command(config, threads)
            log.info("%s completed in %.3fs", args.command,
                     time.perf_counter() - start)
            fmt = args.format or config.output_format
            path = args.output or config.output_path
        _emit(envelope, path, fmt)
        return exit_code
    except ConfigError as exc:
        for message in exc.messages:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
