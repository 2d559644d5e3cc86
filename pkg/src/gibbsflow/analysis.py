"""Convergence-rate analysis and inequality verification.

The product approximants converge in trace norm at a rate eps(n) that
depends only on the declared smoothness parameters (alpha, beta) of the
perturbation family:

    beta = 1                      eps(n) = log(n) / n      (n >= 2)
    beta = 1, alpha in (1/2, 1)   eps(n) = n^{-(1-alpha)}
    beta > 2 alpha - 1 > 0        eps(n) = n^{-beta}
    beta > alpha                  eps(n) = n^{-(beta-alpha)}

Several regimes can apply at once; reports evaluate all of them, with the
headline chosen by the priority order above.  When none applies, the
absence of a known bound is reported explicitly.

Bound checks follow a train/test protocol: the prefactor is fitted as
max err/eps over the leading part of the n-grid and the bound is then
required on the remaining n (optionally with a small slack).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import ConstantsReport, estimate_constants
from .errors import NoKnownRateError, ValidationError
from .linalg import opnorm, trace_norm
from .models import Generator, Model
from .propagator import (
    Scheme,
    make_partition,
    product_approximant,
    reference_propagator,
    step_factor,
)

__all__ = [
    "RegimeKind",
    "RateRegime",
    "applicable_regimes",
    "select_regime",
    "RateFit",
    "fit_rate",
    "RegimeResult",
    "ConvergenceReport",
    "run_convergence",
    "Lemma21Check",
    "verify_lemma21",
    "Lemma21Ensemble",
    "lemma21_ensemble",
    "LiftingCheck",
    "verify_lifting",
    "CocycleCheck",
    "verify_cocycle",
    "ContractionCheck",
    "verify_contraction",
    "ConstantsReport",
    "estimate_constants",
]

# Errors below this are treated as exact reproduction rather than fitted.
EXACT_REPRODUCTION_TOL = 1e-14
# Inequality checks allow rounding noise relative to their right-hand side.
INEQUALITY_SLACK = 1e-10
# The reference oracle should be at least this much below the errors it measures.
ORACLE_HEADROOM = 100.0


class RegimeKind(enum.Enum):
    LIPSCHITZ_LOG = "log(n)/n"
    LIPSCHITZ_HIGH_ALPHA = "n^-(1-alpha)"
    HOELDER_DOMINATED = "n^-beta"
    GENERAL_GAP = "n^-(beta-alpha)"


@dataclass(frozen=True)
class RateRegime:
    """A convergence-rate guarantee eps(n) for declared (alpha, beta)."""

    kind: RegimeKind
    alpha: float
    beta: float

    @property
    def label(self) -> str:
        if self.kind is RegimeKind.LIPSCHITZ_LOG:
            return "log(n)/n"
        if self.kind is RegimeKind.LIPSCHITZ_HIGH_ALPHA:
            return f"n^-{1.0 - self.alpha:g}"
        if self.kind is RegimeKind.HOELDER_DOMINATED:
            return f"n^-{self.beta:g}"
        return f"n^-{self.beta - self.alpha:g}"

    def epsilon(self, n: int) -> float:
        if n < 1:
            raise ValidationError(f"epsilon requires n >= 1, got {n}")
        if self.kind is RegimeKind.LIPSCHITZ_LOG:
            if n < 2:
                raise ValidationError("the log(n)/n rate is defined for n >= 2")
            return math.log(n) / n
        if self.kind is RegimeKind.LIPSCHITZ_HIGH_ALPHA:
            return float(n) ** -(1.0 - self.alpha)
        if self.kind is RegimeKind.HOELDER_DOMINATED:
            return float(n) ** -self.beta
        return float(n) ** -(self.beta - self.alpha)


def _validate_alpha_beta(alpha: float, beta: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise ValidationError(f"alpha must lie in [0, 1), got {alpha}")
    if not 0.0 < beta <= 1.0:
        raise ValidationError(f"beta must lie in (0, 1], got {beta}")


def applicable_regimes(alpha: float, beta: float) -> tuple[RateRegime, ...]:
    """Every known rate regime for (alpha, beta), headline first."""
    _validate_alpha_beta(alpha, beta)
    regimes = []
    if beta == 1.0:
        regimes.append(RateRegime(RegimeKind.LIPSCHITZ_LOG, alpha, beta))
        if 0.5 < alpha < 1.0:
            regimes.append(RateRegime(RegimeKind.LIPSCHITZ_HIGH_ALPHA, alpha, beta))
    else:
        if beta > 2.0 * alpha - 1.0 > 0.0:
            regimes.append(RateRegime(RegimeKind.HOELDER_DOMINATED, alpha, beta))
        if beta > alpha:
            regimes.append(RateRegime(RegimeKind.GENERAL_GAP, alpha, beta))
    return tuple(regimes)


def select_regime(alpha: float, beta: float) -> RateRegime:
    """The headline rate regime; raises ``NoKnownRateError`` when none applies."""
    regimes = applicable_regimes(alpha, beta)
    if not regimes:
        raise NoKnownRateError(
            f"no known convergence-rate bound for alpha={alpha:g}, beta={beta:g}"
        )
    return regimes[0]


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def fit_rate(n_list: Sequence[int], errors: Sequence[float]) -> RateFit:
    """Least-squares slope of log err against log n, ignoring zero errors."""
    n_arr = np.asarray(n_list, dtype=float)
    e_arr = np.asarray(errors, dtype=float)
    if n_arr.shape != e_arr.shape:
        raise ValidationError(
            f"n_list and errors must have equal length, got {n_arr.size} and {e_arr.size}"
        )
    keep = e_arr > 0
    if np.count_nonzero(keep) < 3:
        raise ValidationError(
            f"rate fit needs at least 3 positive errors, got {int(np.count_nonzero(keep))}"
        )
    x = np.log(n_arr[keep])
    y = np.log(e_arr[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r_squared = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), float(r_squared))


@dataclass(frozen=True)
class RegimeResult:
    """Train/test outcome of one rate bound on one error sequence."""

    regime: RateRegime
    prefactor: float
    bound_satisfied: bool
    train_ns: tuple[int, ...]
    test_ns: tuple[int, ...]


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors of one scheme against the oracle, with rate diagnostics."""

    model: str
    scheme: Scheme
    s: float
    t: float
    n_list: tuple[int, ...]
    err_op: tuple[float, ...]
    err_tr: tuple[float, ...]
    fitted_slope: float
    r_squared: float
    fitted_prefactor: Optional[float]
    regime: Optional[RateRegime]
    bound_satisfied: Optional[bool]
    regime_results: tuple[RegimeResult, ...]
    exact_reproduction: bool
    oracle: str
    slack: float
    notes: tuple[str, ...] = ()


def _oracle_for(model: Model, s: float, t: float, tol_ref: float):
    if model.exact is not None:
        return (lambda a, b: np.asarray(model.exact(a, b))), "exact"
    cache: dict[tuple[float, float], np.ndarray] = {}

    def oracle(a: float, b: float) -> np.ndarray:
        key = (a, b)
        if key not in cache:
            cache[key] = reference_propagator(model, a, b, tol_ref).U
        return cache[key]

    return oracle, f"reference(tol={tol_ref:g})"


def run_convergence(model: Model, scheme: Scheme, s: float, t: float,
                    n_list: Sequence[int], tol_ref: float = 1e-10,
                    slack: float = 0.0,
                    fit_ns: Optional[Sequence[int]] = None) -> ConvergenceReport:
    """Measure scheme errors over n_list and check every applicable rate bound.

    Errors are measured against the exact propagator when the model has one,
    otherwise against the reference oracle at tolerance ``tol_ref``.  The
    prefactor of each applicable regime is fitted on ``fit_ns`` (default:
    the first half of n_list) and the bound is tested on the rest, allowing
    a relative ``slack``.
    """
    ns = tuple(int(n) for n in n_list)
    if len(ns) < 3 or any(n < 1 for n in ns) or list(ns) != sorted(set(ns)):
        raise ValidationError(
            f"n_list must be >= 3 strictly increasing positive integers, got {list(n_list)!r}"
        )
    if not 0.0 <= slack < 1.0:
        raise ValidationError(f"slack must lie in [0, 1), got {slack}")
    oracle, oracle_label = _oracle_for(model, s, t, tol_ref)
    u_star = oracle(s, t)

    err_op, err_tr = [], []
    for n in ns:
        u_n = product_approximant(scheme, model, s, t, n).U
        err_op.append(opnorm(u_n - u_star))
        err_tr.append(trace_norm(u_n - u_star))

    notes = []
    exact_reproduction = max(err_tr) <= EXACT_REPRODUCTION_TOL
    if exact_reproduction:
        fit = RateFit(float("nan"), float("nan"), float("nan"))
        notes.append("errors at rounding level; scheme reproduces the propagator exactly")
    else:
        fit = fit_rate(ns, err_tr)

    if oracle_label != "exact":
        smallest = min((e for e in err_tr if e > 0), default=0.0)
        if smallest > 0 and tol_ref > smallest / ORACLE_HEADROOM:
            msg = (f"reference tolerance {tol_ref:g} is within {ORACLE_HEADROOM:g}x "
                   f"of the smallest measured error {smallest:g}")
            warnings.warn(msg)
            notes.append(msg)

    if fit_ns is None:
        train = ns[: max(1, len(ns) // 2)]
    else:
        train = tuple(int(n) for n in fit_ns)
        if any(n not in ns for n in train):
            raise ValidationError(f"fit_ns {list(train)!r} must be a subset of n_list")
    test = tuple(n for n in ns if n not in train)

    alpha = model.perturbation.alpha
    beta = model.perturbation.beta
    regime_results = []
    for regime in applicable_regimes(alpha, beta):
        usable_train = [n for n in train if not (regime.kind is RegimeKind.LIPSCHITZ_LOG and n < 2)]
        usable_test = [n for n in test if not (regime.kind is RegimeKind.LIPSCHITZ_LOG and n < 2)]
        err_of = dict(zip(ns, err_tr))
        prefactor = max((err_of[n] / regime.epsilon(n) for n in usable_train), default=0.0)
        ok = all(err_of[n] <= (1.0 + slack) * prefactor * regime.epsilon(n)
                 for n in usable_test)
        regime_results.append(RegimeResult(
            regime, float(prefactor), bool(ok), tuple(usable_train), tuple(usable_test),
        ))
    if not regime_results:
        notes.append(f"no known convergence-rate bound for alpha={alpha:g}, beta={beta:g}")

    headline = regime_results[0] if regime_results else None
    return ConvergenceReport(
        model=model.descriptor,
        scheme=scheme,
        s=float(s), t=float(t),
        n_list=ns,
        err_op=tuple(float(e) for e in err_op),
        err_tr=tuple(float(e) for e in err_tr),
        fitted_slope=fit.slope,
        r_squared=fit.r_squared,
        fitted_prefactor=None if headline is None else headline.prefactor,
        regime=None if headline is None else headline.regime,
        bound_satisfied=None if headline is None else headline.bound_satisfied,
        regime_results=tuple(regime_results),
        exact_reproduction=exact_reproduction,
        oracle=oracle_label,
        slack=float(slack),
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class Lemma21Check:
    """Trace-norm bound for an interleaved product of contractions and heat factors.

    lhs = ||V_1 e^{-t_1 A} ... V_n e^{-t_n A}||_1,
    rhs = prod_j ||V_j|| * ||e^{-(sum_j t_j) A / 4}||_1.
    """

    lhs: float
    rhs: float
    margin: float
    holds: bool


def verify_lemma21(generator: Generator, contractions: Sequence[np.ndarray],
                   times: Sequence[float]) -> Lemma21Check:
    """Check the interleaved-product trace bound for one instance."""
    if len(contractions) != len(times) or not contractions:
        raise ValidationError(
            f"need equally many factors and times (>= 1), got "
            f"{len(contractions)} and {len(times)}"
        )
    ts = [float(x) for x in times]
    if any(not (np.isfinite(x) and x > 0) for x in ts):
        raise ValidationError(f"times must be positive, got {ts!r}")
    product = np.eye(generator.dim)
    norms = 1.0
    for v, t_j in zip(contractions, ts):
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValidationError("factors must have finite entries")
        product = product @ v @ generator.heat(t_j)
        norms *= opnorm(v)
    lhs = trace_norm(product)
    rhs = norms * trace_norm(generator.heat(0.25 * sum(ts)))
    margin = rhs - lhs
    holds = margin >= -INEQUALITY_SLACK * max(1.0, rhs)
    return Lemma21Check(float(lhs), float(rhs), float(margin), bool(holds))


@dataclass(frozen=True)
class Lemma21Ensemble:
    count: int
    holds: int
    min_margin: float
    dim_max: int
    seed: int


def _random_lemma21_instance(rng: np.random.Generator, dim_max: int):
    dim = int(rng.integers(1, dim_max + 1))
    n_factors = int(rng.integers(1, 9))
    basis = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    eigs = 1.0 + 4.0 * rng.random(dim)
    generator = Generator((basis * eigs) @ basis.T)
    contractions = []
    for _ in range(n_factors):
        q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
        contractions.append(q * rng.random(dim))
    times = 0.01 + 1.99 * rng.random(n_factors)
    return generator, contractions, times


def lemma21_ensemble(count: int = 1000, seed: int = 0, dim_max: int = 16) -> Lemma21Ensemble:
    """Run the interleaved-product bound on seeded random instances."""
    rng = np.random.default_rng(seed)
    holds = 0
    min_margin = float("inf")
    for _ in range(count):
        generator, contractions, times = _random_lemma21_instance(rng, dim_max)
        check = verify_lemma21(generator, contractions, times)
        holds += check.holds
        min_margin = min(min_margin, check.margin)
    return Lemma21Ensemble(count, holds, float(min_margin), dim_max, seed)


@dataclass(frozen=True)
class LiftingCheck:
    """Half-product decomposition of the trace-norm error at even n.

    Splitting the ordered product at k_n = n/2 and the propagator at the
    matching partition time bounds the trace-norm error by operator-norm
    half errors weighted with half trace norms:

        lhs <= e_late * ||P_early||_1 + ||U_late||_1 * e_early.
    """

    scheme: Scheme
    n: int
    k_n: int
    lhs: float
    rhs: float
    half_op_errors: tuple[float, float]
    half_tr_norms: tuple[float, float]
    c_ts: float
    holds: bool


def verify_lifting(model: Model, scheme: Scheme, s: float, t: float, n: int,
                   tol_ref: float = 1e-10) -> LiftingCheck:
    """Check the split-product error bound for one even n."""
    if n < 4 or n % 2 != 0:
        raise ValidationError(f"lifting check requires even n >= 4, got {n}")
    part = make_partition(s, t, n)
    tau = part.step
    k_n = n // 2
    mid = s + k_n * tau

    early = _ordered_product_slice(model, scheme, part.points[:k_n], tau)
    late = _ordered_product_slice(model, scheme, part.points[k_n:], tau)
    u_n = late @ early

    oracle, _ = _oracle_for(model, s, t, tol_ref)
    u_early = oracle(s, mid)
    u_late = oracle(mid, t)
    u_full = u_late @ u_early

    e_late = opnorm(late - u_late)
    e_early = opnorm(early - u_early)
    tr_early = trace_norm(early)
    tr_u_late = trace_norm(u_late)
    lhs = trace_norm(u_n - u_full)
    rhs = e_late * tr_early + tr_u_late * e_early
    c_ts = trace_norm(model.generator.heat(0.5 * (t - s)))
    holds = lhs <= rhs + INEQUALITY_SLACK * max(1.0, rhs)
    return LiftingCheck(
        scheme=scheme, n=int(n), k_n=int(k_n),
        lhs=float(lhs), rhs=float(rhs),
        half_op_errors=(float(e_late), float(e_early)),
        half_tr_norms=(float(tr_early), float(tr_u_late)),
        c_ts=float(c_ts), holds=bool(holds),
    )


def _ordered_product_slice(model: Model, scheme: Scheme, sample_times: np.ndarray,
                           tau: float) -> np.ndarray:
    u = np.eye(model.dim)
    for t_k in sample_times:
        u = step_factor(scheme, model, float(t_k), tau) @ u
    return u


@dataclass(frozen=True)
class CocycleCheck:
    """Composition-law residual ||U(r,t) U(s,r) - U(s,t)|| of an oracle."""

    s: float
    r: float
    t: float
    residual: float
    norm: float
    tol_ref: float

    @property
    def budget(self) -> float:
        """Triangle-inequality budget: three oracles, tol_ref each."""
        return 3.0 * self.tol_ref

    @property
    def holds(self) -> bool:
        return self.residual <= self.budget

    @property
    def contraction_ok(self) -> bool:
        return self.norm <= 1.0 + INEQUALITY_SLACK


def verify_cocycle(model: Model, s: float, r: float, t: float,
                   tol_ref: float = 1e-10) -> CocycleCheck:
    if not s < r < t:
        raise ValidationError(f"cocycle check requires s < r < t, got {(s, r, t)!r}")
    u_sr = reference_propagator(model, s, r, tol_ref)
    u_rt = reference_propagator(model, r, t, tol_ref)
    u_st = reference_propagator(model, s, t, tol_ref)
    residual = trace_norm(u_rt.U @ u_sr.U - u_st.U)
    return CocycleCheck(float(s), float(r), float(t), float(residual),
                        float(opnorm(u_st.U)), float(tol_ref))


@dataclass(frozen=True)
class ContractionCheck:
    """||U_n|| against the generator bound e^{-(t-s)}."""

    scheme: Scheme
    n: int
    s: float
    t: float
    norm: float
    bound: float
    holds: bool


def verify_contraction(model: Model, scheme: Scheme, s: float, t: float,
                       n: int) -> ContractionCheck:
    result = product_approximant(scheme, model, s, t, n)
    norm = opnorm(result.U)
    bound = math.exp(-(t - s) * float(model.generator.eigenvalues[0]))
    holds = norm <= bound + INEQUALITY_SLACK
    return ContractionCheck(scheme, int(n), float(s), float(t),
                            float(norm), float(bound), bool(holds))
