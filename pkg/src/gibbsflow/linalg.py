"""Spectral linear algebra for finite self-adjoint operators.

Everything the package does with operator functions -- semigroup factors
e^{-tH}, fractional powers H^p, Schatten norms -- goes through a single
eigendecomposition path Q f(L) Q^T.  Nothing is exponentiated by series.
Matrices are real symmetric; the decomposition is cached on the operator.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DecompositionError, DomainError, ValidationError

__all__ = [
    "HermitianOperator",
    "eigh",
    "operator_function",
    "heat",
    "fractional_power",
    "singular_values",
    "schatten_norm",
    "trace_norm",
    "opnorm",
]

# Largest admissible relative asymmetry of an input matrix.  Inputs within the
# tolerance are symmetrized; anything beyond it is a caller bug.
SYMMETRY_TOL = 1e-12
# Acceptance threshold for the eigendecomposition self-checks (orthogonality
# of eigenvectors and reconstruction of the operator).
RECONSTRUCTION_TOL = 1e-10


def _as_square_matrix(entries, name: str = "matrix") -> np.ndarray:
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{name} must be square and non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} entries must be finite")
    return m


class HermitianOperator:
    """A real symmetric matrix with a lazily cached eigendecomposition.

    The input is symmetrized on construction; asymmetry beyond
    ``SYMMETRY_TOL`` (relative to the largest entry) is rejected.
    """

    __slots__ = ("entries", "_spectrum")

    def __init__(self, entries):
        m = _as_square_matrix(entries)
        scale = 1.0 + float(np.max(np.abs(m)))
        asym = float(np.max(np.abs(m - m.T)))
        if asym > SYMMETRY_TOL * scale:
            raise ValidationError(
                f"matrix is not symmetric: max|M - M^T| = {asym:.3e} "
                f"exceeds {SYMMETRY_TOL:g} * scale"
            )
        sym = 0.5 * (m + m.T)
        sym.setflags(write=False)
        self.entries = sym
        self._spectrum = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
        if self._spectrum is None:
            try:
                w, q = np.linalg.eigh(self.entries)
            except np.linalg.LinAlgError as exc:
                cond = None
                try:
                    cond = float(np.linalg.cond(self.entries))
                except Exception:
                    pass
                raise DecompositionError(
                    f"eigendecomposition did not converge: {exc}",
                    dim=self.dim, cond=cond,
                ) from exc
            scale = 1.0 + float(np.max(np.abs(w), initial=0.0))
            ortho = float(np.max(np.abs(q.T @ q - np.eye(self.dim))))
            recon = float(np.max(np.abs((q * w) @ q.T - self.entries)))
            if ortho > RECONSTRUCTION_TOL or recon > RECONSTRUCTION_TOL * scale:
                raise DecompositionError(
                    f"eigendecomposition failed self-check: "
                    f"orthogonality defect {ortho:.3e}, reconstruction defect {recon:.3e}",
                    dim=self.dim, cond=float(np.max(np.abs(w)) / max(np.min(np.abs(w)), 1e-300)),
                )
            w.setflags(write=False)
            q.setflags(write=False)
            self._spectrum = (w, q)
        return self._spectrum

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order and the orthonormal eigenvector matrix.

    Accepts a ``HermitianOperator`` or any symmetric matrix.
    """
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    return h.spectrum()


def operator_function(h: HermitianOperator, f: Callable[[np.ndarray], np.ndarray]) -> HermitianOperator:
    """Apply a scalar function to a symmetric operator: Q f(L) Q^T.

    ``f`` receives the eigenvalue vector and must return finite values for
    every eigenvalue; a non-finite value raises ``DomainError`` naming the
    offending eigenvalue.
    """
    w, q = h.spectrum()
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
        if fw.shape != w.shape:
            fw = np.asarray([f(x) for x in w], dtype=float)
    bad = ~np.isfinite(fw)
    if np.any(bad):
        lam = w[bad][0]
        raise DomainError(f"operator function is undefined at eigenvalue {lam!r}")
    return HermitianOperator((q * fw) @ q.T)


def heat(h: HermitianOperator, t: float) -> np.ndarray:
    """Entries of the semigroup factor e^{-tH} for t >= 0."""
    if t < 0:
        raise ValidationError(f"heat kernel requires t >= 0, got {t}")
    w, q = h.spectrum()
    return (q * np.exp(-t * w)) @ q.T


def fractional_power(h: HermitianOperator, p: float) -> HermitianOperator:
    """H^p via the spectrum; negative or fractional powers require positive spectrum."""
    w, _ = h.spectrum()
    if (p < 0 or p != round(p)) and np.any(w <= 0):
        lam = w[w <= 0][0]
        raise DomainError(f"power {p} is undefined at non-positive eigenvalue {lam!r}")
    return operator_function(h, lambda lam: np.power(lam, p))


def singular_values(m) -> np.ndarray:
    """Singular values in descending order."""
    a = _as_square_matrix(m)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(
            f"singular value decomposition did not converge: {exc}", dim=a.shape[0]
        ) from exc


def schatten_norm(m, p) -> float:
    """Schatten p-norm for p in {1, 2, inf}: trace norm, Frobenius, operator norm."""
    s = singular_values(m)
    if p == 1:
        return float(np.sum(s))
    if p == 2:
        return float(np.sqrt(np.sum(s * s)))
    if p == np.inf:
        return float(s[0])
    raise ValidationError(f"unsupported Schatten order {p!r}; expected 1, 2 or inf")


def trace_norm(m) -> float:
    return schatten_norm(m, 1)


def opnorm(m) -> float:
    return schatten_norm(m, np.inf)
