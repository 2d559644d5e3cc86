"""Estimation of the structural constants of a model.

For a model with generator A (spectrum >= 1) and perturbation B(t):

    c_alpha       sup_t ||B(t) A^{-alpha}||            (relative bound)
    l_alpha_beta  sup_{t,r} ||A^{-alpha}(B(t)-B(r))A^{-alpha}|| / |t-r|^beta
    m_alpha       sup_{tau in (0, t-s]} tau^alpha ||e^{-tau A} A^alpha||
    xi            c_alpha * m_alpha * (t-s)^{1-alpha} / (1-alpha)

xi < 1 makes the perturbation series over [s, t] geometrically convergent
with tail ratio xi.  Suprema over t are approximated by maxima over a
uniform grid on the full horizon [0, T]; the supremum over tau uses a
geometric grid on (0, t-s] plus the analytic tau -> 0+ limit (1 for
alpha = 0, 0 for alpha > 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import fractional_power, opnorm
from .models import Model

__all__ = ["ConstantsReport", "estimate_constants", "contraction_coefficient"]

# Points in the geometric tau-grid for the smoothing constant.
SMOOTHING_GRID = 241
# xi must recompute from its factors to this relative tolerance.
XI_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class ConstantsReport:
    """Grid estimates of the structural constants over [s, t]."""

    c_alpha: float
    m_alpha: float
    l_alpha_beta: float
    xi: float
    alpha: float
    beta: float
    s: float
    t: float
    grid: int

    def __post_init__(self):
        delta = self.t - self.s
        recomputed = (self.c_alpha * self.m_alpha * delta ** (1.0 - self.alpha)
                      / (1.0 - self.alpha))
        scale = max(abs(self.xi), abs(recomputed), 1e-300)
        if abs(self.xi - recomputed) > XI_CONSISTENCY_TOL * scale:
            raise ValidationError(
                f"xi={self.xi!r} inconsistent with its factors ({recomputed!r})"
            )


def smoothing_constant(eigenvalues: np.ndarray, delta: float, alpha: float) -> float:
    """sup over tau in (0, delta] of tau^alpha ||e^{-tau A} A^alpha||.

    With A symmetric the norm is max_i (tau lambda_i)^alpha e^{-tau lambda_i},
    evaluated on a geometric tau-grid; the tau -> 0+ limit is included
    analytically so the alpha = 0 value is exactly 1.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    taus = delta * np.logspace(-8.0, 0.0, SMOOTHING_GRID)
    x = taus[:, None] * lam[None, :]
    values = x ** alpha * np.exp(-x)
    limit = 1.0 if alpha == 0.0 else 0.0
    return float(max(np.max(values), limit))


def _relative_bound(model: Model, grid: int) -> float:
    """Grid maximum of ||B(t) A^{-alpha}|| over the horizon."""
    alpha = model.perturbation.alpha
    a = model.generator.operator
    a_neg = fractional_power(a, -alpha).entries if alpha != 0.0 else np.eye(model.dim)
    times = np.linspace(0.0, model.horizon, grid)
    return max(opnorm(model.perturbation.evaluate(ti).entries @ a_neg) for ti in times)


def contraction_coefficient(model: Model, s: float, t: float, grid: int = 101) -> float:
    """xi = c_alpha * m_alpha * (t-s)^{1-alpha} / (1-alpha) for [s, t].

    The perturbation series over [s, t] has tail ratio xi when xi < 1;
    computed without the (expensive) Hoelder constant.
    """
    if not s < t:
        raise ValidationError(f"coefficient requires s < t, got s={s!r}, t={t!r}")
    alpha = model.perturbation.alpha
    c_alpha = _relative_bound(model, grid)
    m_alpha = smoothing_constant(model.generator.eigenvalues, t - s, alpha)
    return c_alpha * m_alpha * (t - s) ** (1.0 - alpha) / (1.0 - alpha)


def estimate_constants(model: Model, s: float, t: float, grid: int = 101) -> ConstantsReport:
    """Grid estimates of (c_alpha, m_alpha, l_alpha_beta, xi) for [s, t].

    ``grid`` sets the number of horizon sample times; the Hoelder constant
    maximizes the quotient over all grid pairs.
    """
    if not s < t:
        raise ValidationError(f"constants require s < t, got s={s!r}, t={t!r}")
    if not (isinstance(grid, (int, np.integer)) and grid >= 2):
        raise ValidationError(f"grid must be an integer >= 2, got {grid!r}")
    alpha = model.perturbation.alpha
    beta = model.perturbation.beta
    a = model.generator.operator
    a_neg = fractional_power(a, -alpha).entries if alpha != 0.0 else np.eye(model.dim)

    times = np.linspace(0.0, model.horizon, grid)
    b_entries = [model.perturbation.evaluate(ti).entries for ti in times]

    c_alpha = max(opnorm(b @ a_neg) for b in b_entries)

    sandwiched = [a_neg @ b @ a_neg for b in b_entries]
    l_alpha_beta = 0.0
    for i in range(grid):
        for j in range(i + 1, grid):
            gap = abs(times[j] - times[i]) ** beta
            quotient = opnorm(sandwiched[j] - sandwiched[i]) / gap
            if quotient > l_alpha_beta:
                l_alpha_beta = quotient

    delta = t - s
    m_alpha = smoothing_constant(model.generator.eigenvalues, delta, alpha)
    xi = c_alpha * m_alpha * delta ** (1.0 - alpha) / (1.0 - alpha)
    return ConstantsReport(
        c_alpha=float(c_alpha), m_alpha=float(m_alpha),
        l_alpha_beta=float(l_alpha_beta), xi=float(xi),
        alpha=alpha, beta=beta, s=float(s), t=float(t), grid=int(grid),
    )
