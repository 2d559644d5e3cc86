"""Experiment configuration: one human-editable YAML document.

``parse_config`` validates the whole document and reports *every* failure it
finds (with dotted key paths), not just the first.  A parsed configuration
normalizes to a plain dictionary that re-parses to an equal configuration,
which is how report envelopes echo their provenance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError
from .models import (
    Model,
    commuting_model,
    constant_profile,
    kink_profile,
    linear_profile,
    rotating_model,
    scalar_model,
)

__all__ = ["ExperimentConfig", "VerifySpec", "parse_config", "config_from_dict", "build_model"]

SCHEME_NAMES = ("left", "right", "symmetric")
OUTPUT_FORMATS = ("csv", "jsonl", "plot")
PROFILE_KINDS = ("constant", "linear", "kink")
MODEL_FAMILIES = ("scalar", "commuting", "rotating")

DEFAULT_N_LIST = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class VerifySpec:
    """Sizes of the property suites run by the ``verify`` subcommand."""

    lemma_instances: int = 1000
    dim_max: int = 16
    lifting_ns: tuple[int, ...] = (4, 8, 16, 32)
    cocycle_triples: int = 20
    contraction_ns: tuple[int, ...] = (4, 16, 64)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description."""

    model_family: str
    model_params: dict
    alpha: float = 0.0
    beta: float = 1.0
    horizon: float = 1.0
    s: float = 0.0
    t: float = 1.0
    schemes: tuple[str, ...] = SCHEME_NAMES
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    tol_ref: float = 1e-10
    slack: float = 0.1
    grid: int = 101
    seed: int = 0
    output_path: str = "-"
    output_format: str = "jsonl"
    verify: VerifySpec = field(default_factory=VerifySpec)

    def to_dict(self) -> dict:
        """Canonical plain-data form; re-parses to an equal config."""
        return {
            "model": {"family": self.model_family, **self.model_params},
            "alpha": self.alpha,
            "beta": self.beta,
            "horizon": self.horizon,
            "s": self.s,
            "t": self.t,
            "scheme": list(self.schemes),
            "n_list": list(self.n_list),
            "tol_ref": self.tol_ref,
            "slack": self.slack,
            "grid": self.grid,
            "seed": self.seed,
            "output": {"path": self.output_path, "format": self.output_format},
            "verify": {
                "lemma_instances": self.verify.lemma_instances,
                "dim_max": self.verify.dim_max,
                "lifting_ns": list(self.verify.lifting_ns),
                "cocycle_triples": self.verify.cocycle_triples,
                "contraction_ns": list(self.verify.contraction_ns),
            },
        }


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def error(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def require_number(self, data: dict, path: str, key: str, default=None,
                       lo=None, hi=None, lo_open=False, hi_open=False):
        value = data.get(key, default)
        if value is None:
            self.error(f"{path}{key}", "is required")
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error(f"{path}{key}", f"must be a number, got {value!r}")
            return None
        value = float(value)
        if not np.isfinite(value):
            self.error(f"{path}{key}", f"must be finite, got {value!r}")
            return None
        if lo is not None and (value <= lo if lo_open else value < lo):
            self.error(f"{path}{key}",
                       f"must be {'>' if lo_open else '>='} {lo:g}, got {value:g}")
            return None
        if hi is not None and (value >= hi if hi_open else value > hi):
            self.error(f"{path}{key}",
                       f"must be {'<' if hi_open else '<='} {hi:g}, got {value:g}")
            return None
        return value

    def require_int(self, data: dict, path: str, key: str, default=None, lo=None, hi=None):
        value = data.get(key, default)
        if value is None:
            self.error(f"{path}{key}", "is required")
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(f"{path}{key}", f"must be an integer, got {value!r}")
            return None
        if lo is not None and value < lo:
            self.error(f"{path}{key}", f"must be >= {lo}, got {value}")
            return None
        if hi is not None and value > hi:
            self.error(f"{path}{key}", f"must be <= {hi}, got {value}")
            return None
        return int(value)

    def check_known_keys(self, data: dict, path: str, known: tuple[str, ...]) -> None:
        for key in data:
            if key not in known:
                self.error(f"{path}{key}", f"unknown key (expected one of {', '.join(known)})")


def _float_list(raw, col: _Collector, path: str, *, count: int | None = None):
    """A list of floats, or a {start, stop, count} linspace shorthand."""
    if isinstance(raw, dict):
        col.check_known_keys(raw, f"{path}.", ("start", "stop", "count"))
        start = col.require_number(raw, f"{path}.", "start")
        stop = col.require_number(raw, f"{path}.", "stop")
        n = col.require_int(raw, f"{path}.", "count", default=count, lo=1)
        if None in (start, stop, n):
            return None
        return [float(x) for x in np.linspace(start, stop, n)]
    if isinstance(raw, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                     for x in raw):
        return [float(x) for x in raw]
    col.error(path, f"must be a list of numbers or {{start, stop, count}}, got {raw!r}")
    return None


def _parse_profile(raw, col: _Collector, path: str, default_beta: float):
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = {"kind": "constant", "value": float(raw)}
    if not isinstance(raw, dict):
        col.error(path, f"must be a number or a mapping with 'kind', got {raw!r}")
        return None, None
    kind = raw.get("kind")
    if kind not in PROFILE_KINDS:
        col.error(f"{path}.kind", f"must be one of {', '.join(PROFILE_KINDS)}, got {kind!r}")
        return None, None
    if kind == "constant":
        col.check_known_keys(raw, f"{path}.", ("kind", "value"))
        value = col.require_number(raw, f"{path}.", "value", lo=0.0)
        if value is None:
            return None, None
        return constant_profile(value), {"kind": "constant", "value": value}
    if kind == "linear":
        col.check_known_keys(raw, f"{path}.", ("kind", "slope", "offset"))
        slope = col.require_number(raw, f"{path}.", "slope")
        offset = col.require_number(raw, f"{path}.", "offset", default=0.0, lo=0.0)
        if None in (slope, offset):
            return None, None
        return linear_profile(slope, offset), {"kind": "linear", "slope": slope, "offset": offset}
    col.check_known_keys(raw, f"{path}.", ("kind", "t0", "beta", "scale", "offset"))
    t0 = col.require_number(raw, f"{path}.", "t0")
    beta = col.require_number(raw, f"{path}.", "beta", default=default_beta,
                              lo=0.0, lo_open=True, hi=1.0)
    scale = col.require_number(raw, f"{path}.", "scale", default=1.0, lo=0.0)
    offset = col.require_number(raw, f"{path}.", "offset", default=0.0, lo=0.0)
    if None in (t0, beta, scale, offset):
        return None, None
    return (kink_profile(t0, beta, scale, offset),
            {"kind": "kink", "t0": t0, "beta": beta, "scale": scale, "offset": offset})


def _parse_n_list(raw, col: _Collector):
    if raw is None:
        return DEFAULT_N_LIST
    if isinstance(raw, dict):
        col.check_known_keys(raw, "n_list.", ("start", "stop", "factor"))
        start = col.require_int(raw, "n_list.", "start", lo=1)
        stop = col.require_int(raw, "n_list.", "stop", lo=1)
        factor = col.require_int(raw, "n_list.", "factor", default=2, lo=2)
        if None in (start, stop, factor) or stop < start:
            if stop is not None and start is not None and stop < start:
                col.error("n_list.stop", f"must be >= start, got {stop} < {start}")
            return None
        values = []
        n = start
        while n <= stop:
            values.append(n)
            n *= factor
        return tuple(values)
    if isinstance(raw, list) and all(isinstance(x, int) and not isinstance(x, bool)
                                     for x in raw):
        if any(x < 1 for x in raw) or list(raw) != sorted(set(raw)):
            col.error("n_list", f"must be strictly increasing positive integers, got {raw!r}")
            return None
        return tuple(raw)
    col.error("n_list", f"must be a list of integers or {{start, stop, factor}}, got {raw!r}")
    return None


TOP_KEYS = ("model", "alpha", "beta", "horizon", "s", "t", "scheme", "n_list",
            "tol_ref", "slack", "grid", "seed", "output", "verify")


def config_from_dict(data: Any) -> ExperimentConfig:
    """Validate a plain-data configuration, collecting every failure."""
    col = _Collector()
    if not isinstance(data, dict):
        raise ConfigError([f"configuration must be a mapping, got {type(data).__name__}"])
    col.check_known_keys(data, "", TOP_KEYS)

    alpha = col.require_number(data, "", "alpha", default=0.0, lo=0.0, hi=1.0, hi_open=True)
    beta = col.require_number(data, "", "beta", default=1.0, lo=0.0, lo_open=True, hi=1.0)
    horizon = col.require_number(data, "", "horizon", default=1.0, lo=0.0, lo_open=True)
    s = col.require_number(data, "", "s", default=0.0, lo=0.0)
    t = col.require_number(data, "", "t", default=1.0, lo=0.0, lo_open=True)
    if s is not None and t is not None and not s < t:
        col.error("s", f"must satisfy s < t, got s={s:g}, t={t:g}")
    if t is not None and horizon is not None and t > horizon:
        col.error("t", f"must satisfy t <= horizon, got t={t:g}, horizon={horizon:g}")

    raw_scheme = data.get("scheme", "all")
    if raw_scheme == "all":
        schemes: Optional[tuple[str, ...]] = SCHEME_NAMES
    elif isinstance(raw_scheme, str) and raw_scheme in SCHEME_NAMES:
        schemes = (raw_scheme,)
    elif (isinstance(raw_scheme, list) and raw_scheme
          and all(x in SCHEME_NAMES for x in raw_scheme)
          and len(set(raw_scheme)) == len(raw_scheme)):
        schemes = tuple(raw_scheme)
    else:
        col.error("scheme", f"must be 'all', one of {', '.join(SCHEME_NAMES)}, "
                            f"or a list of distinct scheme names, got {raw_scheme!r}")
        schemes = None

    n_list = _parse_n_list(data.get("n_list"), col)
    if n_list is not None and len(n_list) < 3:
        col.error("n_list", f"needs at least 3 values for rate fitting, got {list(n_list)!r}")
    tol_ref = col.require_number(data, "", "tol_ref", default=1e-10, lo=0.0, lo_open=True)
    slack = col.require_number(data, "", "slack", default=0.1, lo=0.0, hi=1.0, hi_open=True)
    grid = col.require_int(data, "", "grid", default=101, lo=2)
    seed = col.require_int(data, "", "seed", default=0, lo=0, hi=2 ** 64 - 1)

    raw_output = data.get("output", {})
    output_path, output_format = "-", "jsonl"
    if not isinstance(raw_output, dict):
        col.error("output", f"must be a mapping, got {raw_output!r}")
    else:
        col.check_known_keys(raw_output, "output.", ("path", "format"))
        output_path = raw_output.get("path", "-")
        if not isinstance(output_path, str) or not output_path:
            col.error("output.path", f"must be a non-empty string, got {output_path!r}")
        output_format = raw_output.get("format", "jsonl")
        if output_format not in OUTPUT_FORMATS:
            col.error("output.format",
                      f"must be one of {', '.join(OUTPUT_FORMATS)}, got {output_format!r}")

    raw_verify = data.get("verify", {})
    verify = VerifySpec()
    if not isinstance(raw_verify, dict):
        col.error("verify", f"must be a mapping, got {raw_verify!r}")
    else:
        col.check_known_keys(raw_verify, "verify.",
                             ("lemma_instances", "dim_max", "lifting_ns",
                              "cocycle_triples", "contraction_ns"))
        lemma = col.require_int(raw_verify, "verify.", "lemma_instances", default=1000, lo=1)
        dim_max = col.require_int(raw_verify, "verify.", "dim_max", default=16, lo=1)
        triples = col.require_int(raw_verify, "verify.", "cocycle_triples", default=20, lo=1)
        lifting_ns = raw_verify.get("lifting_ns", [4, 8, 16, 32])
        if (not isinstance(lifting_ns, list) or not lifting_ns
                or any(not isinstance(x, int) or x < 4 or x % 2 for x in lifting_ns)):
            col.error("verify.lifting_ns", f"must be even integers >= 4, got {lifting_ns!r}")
            lifting_ns = None
        contraction_ns = raw_verify.get("contraction_ns", [4, 16, 64])
        if (not isinstance(contraction_ns, list) or not contraction_ns
                or any(not isinstance(x, int) or x < 1 for x in contraction_ns)):
            col.error("verify.contraction_ns", f"must be integers >= 1, got {contraction_ns!r}")
            contraction_ns = None
        if None not in (lemma, dim_max, triples, lifting_ns, contraction_ns):
            verify = VerifySpec(lemma, dim_max, tuple(lifting_ns), triples,
                                tuple(contraction_ns))

    family, params = _parse_model(data.get("model"), col,
                                  beta if beta is not None else 1.0,
                                  horizon if horizon is not None else 1.0)

    if col.errors:
        raise ConfigError(col.errors)
    return ExperimentConfig(
        model_family=family, model_params=params,
        alpha=alpha, beta=beta, horizon=horizon, s=s, t=t,
        schemes=schemes, n_list=tuple(n_list), tol_ref=tol_ref, slack=slack,
        grid=grid, seed=seed,
        output_path=output_path, output_format=output_format, verify=verify,
    )


def _parse_model(raw, col: _Collector, beta: float, horizon: float):
    if not isinstance(raw, dict):
        col.error("model", f"is required and must be a mapping, got {raw!r}")
        return None, None
    family = raw.get("family")
    if family not in MODEL_FAMILIES:
        col.error("model.family",
                  f"must be one of {', '.join(MODEL_FAMILIES)}, got {family!r}")
        return None, None
    if family == "scalar":
        col.check_known_keys(raw, "model.", ("family", "a", "b"))
        a = col.require_number(raw, "model.", "a", lo=1.0)
        profile, profile_dict = _parse_profile(raw.get("b", 0.0), col, "model.b", beta)
        if None in (a, profile):
            return family, None
        return family, {"a": a, "b": profile_dict}
    if family == "commuting":
        col.check_known_keys(raw, "model.", ("family", "lambdas", "d0", "b"))
        lambdas = _float_list(raw.get("lambdas"), col, "model.lambdas")
        d0 = _float_list(raw.get("d0"), col, "model.d0",
                         count=None if lambdas is None else len(lambdas))
        profile, profile_dict = _parse_profile(raw.get("b", 0.0), col, "model.b", beta)
        if None in (lambdas, d0, profile):
            return family, None
        if min(lambdas) < 1.0:
            col.error("model.lambdas", f"must all be >= 1, got min {min(lambdas):g}")
        if min(d0) < 0.0:
            col.error("model.d0", f"must be non-negative, got min {min(d0):g}")
        if len(d0) != len(lambdas):
            col.error("model.d0", f"length {len(d0)} must match lambdas ({len(lambdas)})")
        return family, {"lambdas": lambdas, "d0": d0, "b": profile_dict}
    col.check_known_keys(raw, "model.", ("family", "lambdas", "b0", "omega", "t0"))
    lambdas = _float_list(raw.get("lambdas"), col, "model.lambdas")
    omega = col.require_number(raw, "model.", "omega")
    t0 = col.require_number(raw, "model.", "t0", default=0.5, lo=0.0, hi=horizon)
    b0_raw = raw.get("b0")
    b0 = None
    if isinstance(b0_raw, list) and b0_raw and all(isinstance(r, list) for r in b0_raw):
        if (len({len(r) for r in b0_raw}) == 1 and len(b0_raw[0]) == len(b0_raw)
                and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                        for r in b0_raw for x in r)):
            b0 = [[float(x) for x in r] for r in b0_raw]
        else:
            col.error("model.b0", "nested lists must form a square numeric matrix")
    else:
        b0 = _float_list(b0_raw, col, "model.b0")
    if None in (lambdas, omega, t0) or b0 is None:
        return family, None
    if min(lambdas) < 1.0:
        col.error("model.lambdas", f"must all be >= 1, got min {min(lambdas):g}")
    if len(lambdas) < 2:
        col.error("model.lambdas", f"rotating model needs >= 2 eigenvalues, got {len(lambdas)}")
    return family, {"lambdas": lambdas, "b0": b0, "omega": omega, "t0": t0}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML configuration document."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"invalid YAML: {exc}"]) from exc
    return config_from_dict(data)


def _profile_from_dict(spec: dict, default_beta: float):
    kind = spec["kind"]
    if kind == "constant":
        return constant_profile(spec["value"])
    if kind == "linear":
        return linear_profile(spec["slope"], spec.get("offset", 0.0))
    return kink_profile(spec["t0"], spec.get("beta", default_beta),
                        spec.get("scale", 1.0), spec.get("offset", 0.0))


def build_model(config: ExperimentConfig) -> Model:
    """Construct the configured model instance."""
    params = config.model_params
    if config.model_family == "scalar":
        return scalar_model(params["a"], _profile_from_dict(params["b"], config.beta),
                            beta=config.beta, alpha=config.alpha, horizon=config.horizon)
    if config.model_family == "commuting":
        return commuting_model(params["lambdas"], params["d0"],
                               _profile_from_dict(params["b"], config.beta),
                               beta=config.beta, alpha=config.alpha, horizon=config.horizon)
    return rotating_model(params["lambdas"], np.asarray(params["b0"], dtype=float),
                          params["omega"], beta=config.beta, t0=params["t0"],
                          alpha=config.alpha, horizon=config.horizon)
