"""Perturbation-series construction of the propagator.

With G(r) = e^{-rA}, the solution operator of du/dt = -(A + B(t)) u obeys
U(t, s) = sum_k S_k(t, s) with

    S_0(t, s) = G(t - s),
    S_k(t, s) = - int_s^t G(t - r) B(r) S_{k-1}(r, s) dr,

and, when the contraction coefficient xi of the interval is < 1, the terms
satisfy ||S_k||_1 <= xi^k, so truncating after N terms leaves a tail of at
most xi^{N+1} / (1 - xi).

The nested integrals are evaluated by collocation on a fixed composite
Gauss-Legendre grid, working in the eigenbasis of A so that every
application of G is a diagonal scaling.  Cumulative panel integrals are
propagated with the semigroup identity G(x + d - r) = G(d) G(x - r); values
of S_{k-1} at partial-panel quadrature nodes come from barycentric
interpolation on the panel.  Panel counts double until two refinements of
the requested quantity agree in trace norm within the quadrature tolerance.

Intervals with xi >= 1/2 are bisected and the halves composed through the
propagator composition law; truncation tails add across the composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import contraction_coefficient
from .errors import AccuracyError, ConfigError, ValidationError
from .linalg import trace_norm
from .models import Model
from .propagator import PropagatorResult
from .quadrature import QuadratureSpec, _leggauss, panel_edges

__all__ = ["dyson_phillips_term", "dyson_phillips_sum"]

# Bisect whenever the interval's contraction coefficient reaches this value.
BISECTION_THRESHOLD = 0.5
# Hard caps on series depth and recursive bisection.
MAX_DEPTH = 40
MAX_BISECTIONS = 32


class _CollocationGrid:
    """Fixed quadrature grid on [s, t] with everything precomputed.

    Shapes: M panels, P nodes per panel, dimension d.  All level arrays are
    expressed in the eigenbasis of A.
    """

    def __init__(self, model: Model, s: float, t: float, n_panels: int,
                 nodes_per_panel: int):
        lam, q = model.generator.operator.spectrum()
        self.lam, self.q = lam, q
        self.s, self.t = s, t
        d = lam.size

        edges = panel_edges(s, t, n_panels, model.perturbation.breakpoints)
        xi0, w0 = _leggauss(nodes_per_panel)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = mid[:, None] + half[:, None] * xi0[None, :]          # (M, P)
        weights = half[:, None] * w0[None, :]                        # (M, P)
        m_panels, p = nodes.shape
        self.nodes, self.weights, self.edges = nodes, weights, edges

        def b_hat(time: float) -> np.ndarray:
            b = model.perturbation.evaluate(float(time)).entries
            return q.T @ b @ q

        self.b_nodes = np.array([[b_hat(x) for x in row] for row in nodes])

        # Semigroup scalings: across whole panels, node -> right edge,
        # left edge -> node.
        self.exp_panel = np.exp(-(edges[1:] - edges[:-1])[:, None] * lam)      # (M, d)
        self.exp_right = np.exp(-(edges[1:, None] - nodes)[..., None] * lam)   # (M, P, d)
        self.exp_tocell = np.exp(-(nodes - edges[:-1, None])[..., None] * lam)  # (M, P, d)

        # Partial-panel quadrature: fresh Gauss-Legendre nodes on
        # [edge_p, node_{p,i}] for every node, with barycentric interpolation
        # of panel values to the fresh positions (in normalized coordinates).
        lo = np.broadcast_to(edges[:-1, None, None], (m_panels, p, 1))
        hi = nodes[..., None]
        fmid = 0.5 * (lo + hi)
        fhalf = 0.5 * (hi - lo)
        self.fresh = fmid + fhalf * xi0[None, None, :]               # (M, P, P)
        self.fresh_w = fhalf * w0[None, None, :]                     # (M, P, P)
        self.b_fresh = np.array(
            [[[b_hat(x) for x in row] for row in panel] for panel in self.fresh]
        )
        self.exp_fresh = np.exp(-(nodes[..., None] - self.fresh)[..., None] * lam)  # (M,P,P,d)

        zeta = (self.fresh - mid[:, None, None]) / half[:, None, None]
        self.interp = _barycentric_rows(xi0, zeta)                   # (M, P, P, P)

        # S_0 in the eigenbasis: diagonal heat factors from s.
        eye = np.eye(d)
        self.t0_nodes = np.exp(-(nodes - s)[..., None] * lam)[..., None] * eye  # (M,P,d,d)
        self.t0_end = np.diag(np.exp(-(t - s) * lam))

    def level(self, prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One series level: values at all nodes and at the right endpoint."""
        m_panels, p, d, _ = prev.shape
        f = self.b_nodes @ prev                                      # (M, P, d, d)
        k = np.einsum("mp,mpab->mab", self.weights, self.exp_right[..., None] * f)
        cum = np.empty((m_panels + 1, d, d))
        cum[0] = 0.0
        for m in range(m_panels):
            cum[m + 1] = self.exp_panel[m][:, None] * cum[m] + k[m]

        t_fresh = np.einsum("mijk,mkab->mijab", self.interp, prev)
        g = self.b_fresh @ t_fresh                                   # (M, P, P, d, d)
        j = np.einsum("mij,mijab->miab", self.fresh_w, self.exp_fresh[..., None] * g)
        new = -(self.exp_tocell[..., None] * cum[:-1, None] + j)
        return new, -cum[m_panels]

    def terms_at_endpoint(self, depth: int) -> list[np.ndarray]:
        """S_0(t, s) .. S_depth(t, s) in the original basis."""
        out = [self.q @ self.t0_end @ self.q.T]
        values = self.t0_nodes
        for _ in range(depth):
            values, end = self.level(values)
            out.append(self.q @ end @ self.q.T)
        return out


def _barycentric_rows(base: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """Barycentric Lagrange rows: out[..., k] = ell_k(zeta) on nodes ``base``."""
    p = base.size
    bw = np.empty(p)
    for k in range(p):
        bw[k] = 1.0 / np.prod(base[k] - np.delete(base, k))
    diff = zeta[..., None] - base                                   # (..., P)
    exact = np.isclose(diff, 0.0, atol=1e-15)
    safe = np.where(exact, 1.0, diff)
    rows = bw / safe
    rows /= rows.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    if np.any(hit):
        rows[hit] = np.where(exact[hit], 1.0, 0.0)
    return rows


def _doubling(model: Model, s: float, t: float, depth: int, quad: QuadratureSpec,
              want: str) -> tuple[list[np.ndarray], int]:
    """Terms at the endpoint, with panel doubling on ``want`` (term or sum)."""

    def target(terms: list[np.ndarray]) -> np.ndarray:
        return terms[-1] if want == "term" else sum(terms)

    n_panels = quad.initial_panels
    grid = _CollocationGrid(model, s, t, n_panels, quad.nodes_per_panel)
    prev_terms = grid.terms_at_endpoint(depth)
    diff = float("inf")
    for _ in range(quad.max_doublings):
        n_panels *= 2
        grid = _CollocationGrid(model, s, t, n_panels, quad.nodes_per_panel)
        terms = grid.terms_at_endpoint(depth)
        diff = trace_norm(target(terms) - target(prev_terms))
        if diff <= quad.tol:
            return terms, n_panels
        prev_terms = terms
    raise AccuracyError(
        f"series quadrature did not converge within {quad.max_doublings} doublings",
        requested=quad.tol, achieved=diff,
    )


def dyson_phillips_term(model: Model, s: float, t: float, k: int,
                        quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """The k-th series term S_k(t, s)."""
    if not s < t:
        raise ValidationError(f"series term requires s < t, got s={s!r}, t={t!r}")
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= MAX_DEPTH):
        raise ValidationError(f"series order must be an integer in [0, {MAX_DEPTH}], got {k!r}")
    if k == 0:
        return model.generator.heat(t - s)
    terms, _ = _doubling(model, s, t, int(k), quad, want="term")
    return terms[-1]


def _truncation_depth(xi: float, eps_tail: float) -> int | None:
    """Smallest N with xi^{N+1}/(1-xi) <= eps_tail, None if beyond the cap."""
    if xi <= 0.0:
        return 0
    target = eps_tail * (1.0 - xi)
    if xi ** (MAX_DEPTH + 1) > target:
        return None
    n = 0
    while xi ** (n + 1) > target:
        n += 1
    return n


def dyson_phillips_sum(model: Model, s: float, t: float, eps_tail: float,
                       quad: QuadratureSpec | None = None, grid: int = 101,
                       _depth: int = 0) -> PropagatorResult:
    """Truncated series propagator with certified truncation tail <= eps_tail.

    Intervals whose contraction coefficient xi reaches 1/2 (or whose depth
    budget is exhausted) are bisected and the halves composed; tail bounds
    add across the composition.  Quadrature error is controlled separately
    by ``quad`` (default tolerance: eps_tail / 10, floored at 1e-13).
    """
    if not (np.isfinite(eps_tail) and eps_tail > 0):
        raise ValidationError(f"eps_tail must be positive, got {eps_tail}")
    if quad is None:
        quad = QuadratureSpec(tol=max(min(eps_tail / 10.0, 1e-8), 1e-13))
    xi = contraction_coefficient(model, s, t, grid)
    depth = _truncation_depth(xi, eps_tail) if xi < BISECTION_THRESHOLD else None
    if depth is None:
        if _depth >= MAX_BISECTIONS:
            raise ConfigError(
                f"series bisection depth exceeded {MAX_BISECTIONS} on "
                f"[{s!r}, {t!r}] (xi={xi:.4g}); the interval cannot be resolved"
            )
        mid = 0.5 * (s + t)
        left = dyson_phillips_sum(model, s, mid, 0.5 * eps_tail, quad, grid, _depth + 1)
        right = dyson_phillips_sum(model, mid, t, 0.5 * eps_tail, quad, grid, _depth + 1)
        tail = (left.tail_bound or 0.0) + (right.tail_bound or 0.0)
        return PropagatorResult(
            right.U @ left.U, float(s), float(t),
            method=f"dyson(bisected at {mid:g}; xi={xi:.4g})",
            tail_bound=tail,
        )
    if depth == 0:
        # The partial sum is S_0 = e^{-(t-s)A} alone; no quadrature needed.
        tail = xi / (1.0 - xi) if xi > 0 else 0.0
        return PropagatorResult(
            model.generator.heat(t - s), float(s), float(t),
            method=f"dyson(depth=0, xi={xi:.4g})", tail_bound=float(tail),
        )
    terms, n_panels = _doubling(model, s, t, depth, quad, want="sum")
    tail = xi ** (depth + 1) / (1.0 - xi) if xi > 0 else 0.0
    return PropagatorResult(
        sum(terms), float(s), float(t),
        method=f"dyson(depth={depth}, xi={xi:.4g}, panels={n_panels})",
        tail_bound=float(tail),
    )
