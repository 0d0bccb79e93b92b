"""Dense complex-matrix kernel.

Hermitian eigendecomposition, unitary exponentials through the spectral
route, and integer matrix powers. Every exponential in the package goes
through :func:`expm_unitary` so that propagators are unitary up to the
accuracy of the eigensolver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, NonHermitian, ShapeMismatch

HERMITIAN_TOL = 1e-9

__all__ = [
    "HERMITIAN_TOL",
    "SpectralDecomposition",
    "as_matrix",
    "check_hermitian",
    "eig_hermitian",
    "expm_unitary",
    "matpow",
    "max_abs",
    "unitarity_error",
]


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite complex128 2-D array (a copy when converted)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatch(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def check_hermitian(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate hermiticity in max-abs norm and return the symmetrized matrix."""
    h = as_matrix(h, square=True)
    dev = max_abs(h - h.conj().T)
    if dev > tol:
        raise NonHermitian(f"max |H - H^dagger| = {dev:.3e} exceeds {tol:.1e}")
    return 0.5 * (h + h.conj().T)


def unitarity_error(u) -> float:
    u = np.asarray(u)
    return max_abs(u.conj().T @ u - np.eye(u.shape[1]))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and unitary eigenvector matrix (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def function(self, f) -> np.ndarray:
        """Apply a scalar function through the spectrum: V f(lambda) V^dagger."""
        v = self.eigenvectors
        return (v * f(self.eigenvalues)) @ v.conj().T


def eig_hermitian(h) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises
    ------
    NonHermitian
        If ``max|H - H^dagger| > 1e-9``.
    ConvergenceFailure
        If LAPACK reports that the iteration did not converge.
    """
    h = check_hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SpectralDecomposition(w, v)


def expm_unitary(h, t: float, spectrum: SpectralDecomposition | None = None) -> np.ndarray:
    """Return ``exp(-i H t)`` for Hermitian ``H``.

    A precomputed ``spectrum`` of ``h`` may be passed to skip the
    eigendecomposition; ``h`` is then ignored.
    """
    if spectrum is None:
        spectrum = eig_hermitian(h)
    return spectrum.function(lambda w: np.exp(-1j * w * t))


def matpow(m, n: int) -> np.ndarray:
    """Integer power ``M**n`` by repeated squaring; ``matpow(M, 0)`` is the identity."""
    if int(n) != n or n < 0:
        raise ValueError(f"power must be a nonnegative integer, got {n!r}")
    m = as_matrix(m, square=True)
    return np.linalg.matrix_power(m, int(n))
