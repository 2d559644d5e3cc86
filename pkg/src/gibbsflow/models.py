"""Problem models: du/dt = -(A + B(t)) u on a finite horizon [0, T].

A model couples a generator A (symmetric, spectrum >= 1) with a non-negative
time-dependent perturbation family B(t) declared to satisfy

    ||B(t) A^{-alpha}||        bounded   (relative boundedness, order alpha),
    ||A^{-alpha}(B(t)-B(s))A^{-alpha}|| <= L |t-s|^beta   (Hoelder in time).

alpha and beta are declared parameters of the family: on a finite-dimensional
truncation every family is bounded and Lipschitz, so the declared values act
as regime selectors for the rate analysis rather than measurable quantities.

Built-in families carry closed-form time integrals where they exist, so the
scalar and commuting models expose exact propagators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ModelError, TimeRangeError
from .linalg import HermitianOperator, heat

__all__ = [
    "TimeProfile",
    "constant_profile",
    "linear_profile",
    "kink_profile",
    "Generator",
    "PerturbationFamily",
    "Model",
    "scalar_model",
    "commuting_model",
    "rotating_model",
    "evaluate_perturbation",
    "givens_rotation",
]

# Smallest admissible generator eigenvalue (A >= 1 up to rounding).
GENERATOR_FLOOR = 1.0 - 1e-12
# Perturbations must be non-negative up to rounding when validated.
NONNEG_TOL = 1e-10
# Uniform sample count used to screen scalar profiles for negativity.
PROFILE_SAMPLES = 1001


@dataclass(frozen=True)
class TimeProfile:
    """Scalar coefficient t -> b(t) with a closed-form antiderivative."""

    label: str
    value: Callable[[float], float]
    integral: Callable[[float, float], float]
    breakpoints: tuple[float, ...] = ()


def constant_profile(c: float) -> TimeProfile:
    c = float(c)
    return TimeProfile(
        label=f"const({c:g})",
        value=lambda t: c,
        integral=lambda s, t: c * (t - s),
    )


def linear_profile(slope: float, offset: float = 0.0) -> TimeProfile:
    slope, offset = float(slope), float(offset)
    return TimeProfile(
        label=f"linear(slope={slope:g}, offset={offset:g})",
        value=lambda t: offset + slope * t,
        integral=lambda s, t: offset * (t - s) + 0.5 * slope * (t * t - s * s),
    )


def kink_profile(t0: float, beta: float, scale: float = 1.0, offset: float = 0.0) -> TimeProfile:
    """b(t) = offset + scale * |t - t0|^beta; Hoelder of order beta at t0."""
    t0, beta, scale, offset = float(t0), float(beta), float(scale), float(offset)
    if not 0.0 < beta <= 1.0:
        raise ModelError(f"kink profile requires beta in (0, 1], got {beta}")

    def antideriv(x: float) -> float:
        u = x - t0
        return math.copysign(abs(u) ** (beta + 1.0) / (beta + 1.0), u)

    return TimeProfile(
        label=f"kink(t0={t0:g}, beta={beta:g}, scale={scale:g}, offset={offset:g})",
        value=lambda t: offset + scale * abs(t - t0) ** beta,
        integral=lambda s, t: offset * (t - s) + scale * (antideriv(t) - antideriv(s)),
        breakpoints=(t0,),
    )


class Generator:
    """Generator A: symmetric with every eigenvalue >= 1 (checked here)."""

    __slots__ = ("operator",)

    def __init__(self, operator):
        if not isinstance(operator, HermitianOperator):
            operator = HermitianOperator(operator)
        w, _ = operator.spectrum()
        if w[0] < GENERATOR_FLOOR:
            raise ModelError(
                f"generator spectrum must satisfy lambda_min >= 1, got {w[0]!r}"
            )
        self.operator = operator

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.operator.spectrum()[0]

    def heat(self, t: float) -> np.ndarray:
        """Entries of e^{-tA}."""
        return heat(self.operator, t)

    def __repr__(self) -> str:
        return f"Generator(dim={self.dim})"


@dataclass(frozen=True)
class PerturbationFamily:
    """Time-dependent perturbation B(t) with declared (alpha, beta).

    ``heat_factor``, when provided, returns the entries of e^{-tau B(t)}
    faster than the generic spectral route; it must agree with it.
    ``breakpoints`` lists the times where t -> B(t) is not smooth, so
    quadratures can align panel edges with them.
    """

    evaluate: Callable[[float], HermitianOperator]
    alpha: float
    beta: float
    descriptor: str
    breakpoints: tuple[float, ...] = ()
    heat_factor: Optional[Callable[[float, float], np.ndarray]] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ModelError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ModelError(f"beta must lie in (0, 1], got {self.beta}")


@dataclass(frozen=True)
class Model:
    """Generator + perturbation family + horizon, with an optional exact propagator.

    ``exact(s, t)`` (when present) returns the solution operator carrying data
    at time s to time t, for 0 <= s <= t <= horizon.
    """

    generator: Generator
    perturbation: PerturbationFamily
    horizon: float = 1.0
    exact: Optional[Callable[[float, float], np.ndarray]] = None
    descriptor: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ModelError(f"horizon must be positive and finite, got {self.horizon}")

    @property
    def dim(self) -> int:
        return self.generator.dim


def evaluate_perturbation(model: Model, t: float, validate: bool = False) -> HermitianOperator:
    """B(t) for t in [0, horizon]; with ``validate`` also check B(t) >= 0."""
    if not 0.0 <= t <= model.horizon:
        raise TimeRangeError(
            f"t={t!r} outside the model horizon [0, {model.horizon!r}]"
        )
    b = model.perturbation.evaluate(t)
    if validate:
        w, _ = b.spectrum()
        if w[0] < -NONNEG_TOL:
            raise ModelError(f"perturbation not non-negative at t={t!r}: min eig {w[0]!r}")
    return b


def _check_profile_nonneg(profile: TimeProfile, horizon: float) -> None:
    ts = np.linspace(0.0, horizon, PROFILE_SAMPLES)
    vals = np.asarray([profile.value(t) for t in ts])
    if np.any(vals < -NONNEG_TOL):
        t_bad = float(ts[np.argmin(vals)])
        raise ModelError(
            f"profile {profile.label} is negative at sampled t={t_bad:g} "
            f"(value {float(np.min(vals)):g})"
        )


def scalar_model(a: float, b: TimeProfile, beta: float | None = None,
                 alpha: float = 0.0, horizon: float = 1.0) -> Model:
    """Dimension-one model: A = (a), B(t) = (b(t)), with the exact propagator
    exp(-a (t-s) - int_s^t b)."""
    a = float(a)
    if isinstance(b, (int, float)):
        b = constant_profile(b)
    _check_profile_nonneg(b, horizon)
    generator = Generator(np.array([[a]]))
    if beta is None:
        beta = 1.0

    def exact(s: float, t: float) -> np.ndarray:
        return np.array([[math.exp(-a * (t - s) - b.integral(s, t))]])

    family = PerturbationFamily(
        evaluate=lambda t: HermitianOperator(np.array([[b.value(t)]])),
        alpha=alpha,
        beta=beta,
        descriptor=f"scalar b={b.label}",
        breakpoints=tuple(x for x in b.breakpoints if 0.0 < x < horizon),
        heat_factor=lambda t, tau: np.array([[math.exp(-tau * b.value(t))]]),
    )
    return Model(generator, family, horizon, exact,
                 descriptor=f"scalar(a={a:g}, b={b.label}, alpha={alpha:g}, beta={beta:g})")


def commuting_model(lambdas, d0, b: TimeProfile, beta: float | None = None,
                    alpha: float = 0.0, horizon: float = 1.0) -> Model:
    """Diagonal model: A = diag(lambdas), B(t) = b(t) diag(d0).

    Everything commutes, so the exact propagator is the diagonal
    exp(-lambda_k (t-s) - d0_k int_s^t b).
    """
    lam = np.asarray(lambdas, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    if lam.ndim != 1 or d0.shape != lam.shape:
        raise ModelError(
            f"lambdas and d0 must be one-dimensional with equal length, "
            f"got {lam.shape} and {d0.shape}"
        )
    if np.any(d0 < 0):
        raise ModelError(f"d0 must be non-negative, got {d0}")
    _check_profile_nonneg(b, horizon)
    generator = Generator(np.diag(lam))
    if beta is None:
        beta = 1.0

    def exact(s: float, t: float) -> np.ndarray:
        ib = b.integral(s, t)
        return np.diag(np.exp(-lam * (t - s) - d0 * ib))

    family = PerturbationFamily(
        evaluate=lambda t: HermitianOperator(np.diag(b.value(t) * d0)),
        alpha=alpha,
        beta=beta,
        descriptor=f"commuting b={b.label}",
        breakpoints=tuple(x for x in b.breakpoints if 0.0 < x < horizon),
        heat_factor=lambda t, tau: np.diag(np.exp(-tau * b.value(t) * d0)),
    )
    return Model(generator, family, horizon, exact,
                 descriptor=f"commuting(dim={lam.size}, b={b.label}, "
                            f"alpha={alpha:g}, beta={beta:g})")


def givens_rotation(dim: int, theta: float) -> np.ndarray:
    """Rotation by theta in the (1, 2) coordinate plane of R^dim."""
    if dim < 2:
        raise ModelError(f"rotation requires dim >= 2, got {dim}")
    r = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    r[0, 0] = c
    r[0, 1] = -s
    r[1, 0] = s
    r[1, 1] = c
    return r


def rotating_model(lambdas, b0, omega: float, beta: float, t0: float = 0.5,
                   alpha: float = 0.0, horizon: float = 1.0) -> Model:
    """Non-commuting model: B(t) = (1 + |t-t0|^beta) R(omega t) b0 R(omega t)^T.

    The rotation R acts in the (1, 2) plane, so B(t) genuinely fails to
    commute with A = diag(lambdas) whenever omega != 0 and b0 couples the
    rotated directions.  There is no closed-form propagator.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size < 2:
        raise ModelError(f"rotating model needs >= 2 eigenvalues, got shape {lam.shape}")
    if not isinstance(b0, HermitianOperator):
        b0 = np.asarray(b0, dtype=float)
        if b0.ndim == 1:
            b0 = np.diag(b0)
        b0 = HermitianOperator(b0)
    if b0.dim != lam.size:
        raise ModelError(f"b0 dimension {b0.dim} does not match generator dimension {lam.size}")
    mu, q0 = b0.spectrum()
    if mu[0] < -NONNEG_TOL:
        raise ModelError(f"b0 must be non-negative, got min eigenvalue {mu[0]!r}")
    mu = np.maximum(mu, 0.0)
    omega, beta, t0 = float(omega), float(beta), float(t0)
    if not 0.0 <= t0 <= horizon:
        raise ModelError(f"t0={t0!r} outside the horizon [0, {horizon!r}]")
    dim = lam.size
    envelope = kink_profile(t0, beta, scale=1.0, offset=1.0)
    generator = Generator(np.diag(lam))

    def rotated_basis(t: float) -> np.ndarray:
        # R(omega t) @ q0 touches only the first two rows of q0.
        v = np.array(q0)
        c, s = math.cos(omega * t), math.sin(omega * t)
        v[0, :] = c * q0[0, :] - s * q0[1, :]
        v[1, :] = s * q0[0, :] + c * q0[1, :]
        return v

    def evaluate(t: float) -> HermitianOperator:
        v = rotated_basis(t)
        return HermitianOperator((v * (envelope.value(t) * mu)) @ v.T)

    def heat_factor(t: float, tau: float) -> np.ndarray:
        v = rotated_basis(t)
        return (v * np.exp(-tau * envelope.value(t) * mu)) @ v.T

    family = PerturbationFamily(
        evaluate=evaluate,
        alpha=alpha,
        beta=beta,
        descriptor=f"rotating omega={omega:g}, envelope={envelope.label}",
        breakpoints=(t0,) if 0.0 < t0 < horizon else (),
        heat_factor=heat_factor,
    )
    return Model(generator, family, horizon, None,
                 descriptor=f"rotating(dim={dim}, omega={omega:g}, t0={t0:g}, "
                            f"alpha={alpha:g}, beta={beta:g})")
