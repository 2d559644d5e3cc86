"""Result records and emitters.

Every computation is reduced to a plain record dictionary (``kind`` key plus
JSON-compatible payload).  Emitters consume record dicts only, so a stored
JSONL stream can be re-emitted in any other format without recomputing.

The JSONL emitter is byte-deterministic for a fixed (configuration, seed)
pair: keys are sorted, floats are serialized at full precision, and
wall-clock measurements (``seconds`` keys) are stripped before writing.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, TextIO

import numpy as np

from . import __version__
from .analysis import (
    CocycleCheck,
    ContractionCheck,
    ConvergenceReport,
    Lemma21Ensemble,
    LiftingCheck,
)
from .constants import ConstantsReport
from .errors import ValidationError

__all__ = [
    "ReportEnvelope",
    "meta_record",
    "constants_record",
    "convergence_record",
    "lifting_record",
    "lemma21_record",
    "cocycle_record",
    "contraction_record",
    "failure_record",
    "write_jsonl",
    "write_csv",
    "write_plot",
    "read_jsonl",
]

RECORD_KINDS = ("meta", "constants", "convergence", "lifting", "lemma21",
                "cocycle", "contraction", "failure")

TIMING_KEY = "seconds"


def _plain(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays to plain Python data."""
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_plain(x) for x in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(x) for x in value]
    return value


def meta_record(config_dict: dict, seed: int) -> dict:
    """Provenance header: configuration echo, package version, seed."""
    return _plain({
        "kind": "meta",
        "schema": 1,
        "package": "gibbsflow",
        "version": __version__,
        "seed": seed,
        "config": config_dict,
    })


def constants_record(report: ConstantsReport) -> dict:
    return _plain({
        "kind": "constants",
        "alpha": report.alpha,
        "beta": report.beta,
        "s": report.s,
        "t": report.t,
        "grid": report.grid,
        "c_alpha": report.c_alpha,
        "m_alpha": report.m_alpha,
        "l_alpha_beta": report.l_alpha_beta,
        "xi": report.xi,
    })


def convergence_record(report: ConvergenceReport, seconds: Optional[float] = None) -> dict:
    record = {
        "kind": "convergence",
        "model": report.model,
        "scheme": report.scheme.value,
        "s": report.s,
        "t": report.t,
        "n_list": list(report.n_list),
        "err_op": list(report.err_op),
        "err_tr": list(report.err_tr),
        "fitted_slope": report.fitted_slope,
        "r_squared": report.r_squared,
        "fitted_prefactor": report.fitted_prefactor,
        "regime": report.regime.label if report.regime is not None else None,
        "bound_satisfied": report.bound_satisfied,
        "regimes": [
            {
                "label": r.regime.label,
                "prefactor": r.prefactor,
                "bound_satisfied": r.bound_satisfied,
                "train_ns": list(r.train_ns),
                "test_ns": list(r.test_ns),
                "epsilon": [r.regime.epsilon(n) for n in report.n_list],
            }
            for r in report.regime_results
        ],
        "exact_reproduction": report.exact_reproduction,
        "oracle": report.oracle,
        "slack": report.slack,
        "notes": list(report.notes),
    }
    if seconds is not None:
        record[TIMING_KEY] = float(seconds)
    return _plain(record)


def lifting_record(check: LiftingCheck) -> dict:
    return _plain({
        "kind": "lifting",
        "scheme": check.scheme.value,
        "n": check.n,
        "k_n": check.k_n,
        "lhs": check.lhs,
        "rhs": check.rhs,
        "half_op_errors": list(check.half_op_errors),
        "half_tr_norms": list(check.half_tr_norms),
        "c_ts": check.c_ts,
        "holds": check.holds,
    })


def lemma21_record(ensemble: Lemma21Ensemble) -> dict:
    return _plain({
        "kind": "lemma21",
        "count": ensemble.count,
        "seed": ensemble.seed,
        "dim_max": ensemble.dim_max,
        "holds_count": ensemble.holds,
        "failures": ensemble.count - ensemble.holds,
        "min_margin": ensemble.min_margin,
        "holds": ensemble.holds == ensemble.count,
    })


def cocycle_record(check: CocycleCheck) -> dict:
    return _plain({
        "kind": "cocycle",
        "s": check.s,
        "r": check.r,
        "t": check.t,
        "residual": check.residual,
        "budget": check.budget,
        "norm": check.norm,
        "contraction_ok": check.contraction_ok,
        "holds": check.holds,
    })


def contraction_record(check: ContractionCheck) -> dict:
    return _plain({
        "kind": "contraction",
        "scheme": check.scheme.value,
        "n": check.n,
        "s": check.s,
        "t": check.t,
        "norm": check.norm,
        "bound": check.bound,
        "holds": check.holds,
    })


def failure_record(stage: str, exc: Exception) -> dict:
    """Degrade an exception to a record so a partial run still reports."""
    messages = (list(exc.messages) if isinstance(exc, ValidationError)
                and getattr(exc, "messages", None) else [str(exc)])
    return _plain({
        "kind": "failure",
        "stage": stage,
        "error": type(exc).__name__,
        "messages": messages,
    })


@dataclass
class ReportEnvelope:
    """Ordered collection of record dicts bound for one output stream."""

    records: list = field(default_factory=list)

    def add(self, record: dict) -> None:
        kind = record.get("kind")
        if kind not in RECORD_KINDS:
            raise ValidationError(f"unknown record kind: {kind!r}")
        self.records.append(record)

    def write(self, stream: TextIO, fmt: str) -> None:
        if fmt == "jsonl":
            write_jsonl(self.records, stream)
        elif fmt == "csv":
            write_csv(self.records, stream)
        elif fmt == "plot":
            write_plot(self.records, stream)
        else:
            raise ValidationError(f"unknown output format: {fmt!r}")


def _strip_timings(record: dict) -> dict:
    return {k: v for k, v in record.items() if k != TIMING_KEY}


def write_jsonl(records: Iterable[dict], stream: TextIO) -> None:
    """One sorted-key JSON object per line; timing fields are stripped."""
    for record in records:
        stream.write(json.dumps(_strip_timings(record), sort_keys=True,
                                separators=(",", ":")))
        stream.write("\n")


def read_jsonl(stream: TextIO) -> list:
    """Parse a stored JSONL stream back into record dicts."""
    records = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: invalid JSON record: {exc}") from exc
        if not isinstance(record, dict) or record.get("kind") not in RECORD_KINDS:
            raise ValidationError(f"line {lineno}: not a known record kind")
        records.append(record)
    return records


CSV_COLUMNS = ("scheme", "n", "err_op", "err_tr", "epsilon_theory", "ratio")


def write_csv(records: Iterable[dict], stream: TextIO) -> None:
    """Flat per-(scheme, n) table of the convergence records.

    ``epsilon_theory`` is the headline-regime rate evaluated at n; ``ratio``
    is err_tr / epsilon_theory (empty when no regime applies).
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        if record.get("kind") != "convergence":
            continue
        headline = record["regimes"][0] if record.get("regimes") else None
        for i, n in enumerate(record["n_list"]):
            eps = headline["epsilon"][i] if headline is not None else None
            ratio = (record["err_tr"][i] / eps) if eps else None
            writer.writerow([
                record["scheme"], n,
                repr(record["err_op"][i]), repr(record["err_tr"][i]),
                "" if eps is None else repr(eps),
                "" if ratio is None else repr(ratio),
            ])


def write_plot(records: Iterable[dict], stream: TextIO) -> None:
    """Gnuplot-ready blocks: one indexed block per convergence record.

    Each block is headed by comment lines naming the model/scheme and the
    columns, followed by whitespace-separated full-precision rows; blocks
    are separated by two blank lines so gnuplot's ``index`` selects them.
    """
    first = True
    for record in records:
        if record.get("kind") != "convergence":
            continue
        if not first:
            stream.write("\n\n")
        first = False
        stream.write(f"# convergence model={record['model']} scheme={record['scheme']}\n")
        stream.write(f"# s={record['s']!r} t={record['t']!r}"
                     f" slope={record['fitted_slope']!r}"
                     f" regime={record['regime']}\n")
        headline = record["regimes"][0] if record.get("regimes") else None
        stream.write("# n err_op err_tr epsilon_theory\n")
        for i, n in enumerate(record["n_list"]):
            eps = headline["epsilon"][i] if headline is not None else float("nan")
            stream.write(f"{n} {record['err_op'][i]!r} {record['err_tr'][i]!r} {eps!r}\n")
