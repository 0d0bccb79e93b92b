"""XX chain as free fermions under repeated measurement of site 0.

The state is the correlation matrix ``C[n, m] = <c_n^dag c_m>``.  A free
step of length ``tau`` maps ``C -> conj(U) C U^T`` with the single-particle
propagator ``U = exp(-i h tau)``; a measurement window of length ``tau_m``
multiplies row 0 (off the diagonal) by ``exp(i r_E tau_m)`` and column 0
by its conjugate.  The apparatus sits in an eigenstate of its pointer
operator, so it enters only through the eigenvalue ``r_E``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericDrift, ShapeMismatch, ZeroEigenvalue
from .spectral import check_hermitian, expm_unitary, matpow, max_abs
from .zeno import ZenoSchedule

DRIFT_TOL = 1e-8
SPECTRUM_TOL = 1e-10
UNDEFINED_POPULATION = 1e-14

__all__ = [
    "Boundary",
    "ChainConfig",
    "MeasurementConfig",
    "XxTrace",
    "check_correlation",
    "critical_times_xx",
    "dispersion",
    "fourier_matrix",
    "free_propagator",
    "free_step_direct",
    "free_step_fourier",
    "hopping_matrix",
    "measure_step",
    "measurement_phases",
    "orbital_correlation",
    "relative_fluctuation",
    "run_trace",
    "site_excitation",
    "superoperator_F",
    "unvec",
    "vec",
]


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class ChainConfig:
    L: int
    g: float
    omega: float = 0.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"chain needs L >= 2 sites, got {self.L!r}")
        if not (np.isfinite(self.g) and np.isfinite(self.omega)):
            raise ValueError("g and omega must be finite reals")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def require_periodic(self, what: str) -> None:
        if not self.periodic:
            raise ValueError(f"{what} requires a PERIODIC chain")


@dataclass(frozen=True)
class MeasurementConfig:
    r_E: float
    tau_m: float

    def __post_init__(self):
        if not np.isfinite(self.r_E):
            raise ValueError("r_E must be finite")
        if not np.isfinite(self.tau_m) or self.tau_m < 0:
            raise ValueError(f"tau_m must be nonnegative, got {self.tau_m!r}")


def relative_fluctuation(p: float) -> float:
    """``sqrt(1/p - 1)``: relative fluctuation of a projector with mean ``p``.

    Returns NaN for ``p <= 0``.
    """
    if p <= 0:
        return float("nan")
    if p > 1 + SPECTRUM_TOL:
        raise ValueError(f"population {p!r} exceeds 1")
    return float(np.sqrt(max(1.0 / p - 1.0, 0.0)))


@dataclass(frozen=True)
class XxTrace:
    """Site-0 population after each cycle ``k = 0..N`` and its relative fluctuation."""

    schedule: ZenoSchedule
    populations: np.ndarray
    relative_fluctuation: np.ndarray = field(init=False)
    final: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.populations, dtype=float)
        fl = np.full(p.shape, np.nan)
        ok = p > UNDEFINED_POPULATION
        fl[ok] = np.sqrt(np.clip(1.0 / p[ok] - 1.0, 0.0, None))
        object.__setattr__(self, "populations", p)
        object.__setattr__(self, "relative_fluctuation", fl)

    @property
    def times(self) -> np.ndarray:
        return self.schedule.times()

    @property
    def defined(self) -> np.ndarray:
        return self.populations > UNDEFINED_POPULATION


# ---------------------------------------------------------------------------
# single-particle structure


def hopping_matrix(cfg: ChainConfig) -> np.ndarray:
    """Single-particle Hamiltonian: ``omega`` on the diagonal, ``g`` on bonds."""
    L = cfg.L
    h = np.diag(np.full(L, cfg.omega, dtype=complex))
    n_bonds = L if cfg.periodic else L - 1
    for n in range(n_bonds):
        m = (n + 1) % L
        h[n, m] += cfg.g
        h[m, n] += cfg.g
    return h


def dispersion(cfg: ChainConfig, k):
    """Mode energies ``omega + 2 g cos(2 pi k / L)``."""
    cfg.require_periodic("dispersion")
    k = np.asarray(k)
    if np.any((k < 0) | (k >= cfg.L)):
        raise ValueError(f"mode index out of range [0, {cfg.L})")
    return cfg.omega + 2 * cfg.g * np.cos(2 * np.pi * k / cfg.L)


def fourier_matrix(L: int) -> np.ndarray:
    """Unitary ``W[x, k] = exp(2 pi i x k / L) / sqrt(L)`` so that ``c = W b``."""
    x = np.arange(L)
    return np.exp(2j * np.pi * np.outer(x, x) / L) / np.sqrt(L)


def free_propagator(cfg: ChainConfig, tau: float) -> np.ndarray:
    """``exp(-i h tau)`` through the eigensolver; valid for either boundary."""
    return expm_unitary(hopping_matrix(cfg), tau)


def _fourier_propagator(cfg: ChainConfig, tau: float) -> np.ndarray:
    w = fourier_matrix(cfg.L)
    eps = dispersion(cfg, np.arange(cfg.L))
    return (w * np.exp(-1j * eps * tau)) @ w.conj().T


def free_step_fourier(c, tau: float, cfg: ChainConfig) -> np.ndarray:
    """Free evolution in mode space.

    ``<b_k^dag b_q>`` picks up ``exp(i (eps_k - eps_q) tau)``.
    """
    cfg.require_periodic("free_step_fourier")
    c = np.asarray(c, dtype=complex)
    w = fourier_matrix(cfg.L)
    eps = dispersion(cfg, np.arange(cfg.L))
    b = w.T @ c @ w.conj()
    b = b * np.exp(1j * (eps[:, None] - eps[None, :]) * tau)
    return w.conj() @ b @ w.T


def free_step_direct(c, tau: float, cfg: ChainConfig, propagator=None) -> np.ndarray:
    """Free evolution by conjugation, ``conj(U) C U^T``.

    ``propagator`` may carry a precomputed ``exp(-i h tau)``.
    """
    u = free_propagator(cfg, tau) if propagator is None else propagator
    return u.conj() @ np.asarray(c, dtype=complex) @ u.T


def measurement_phases(L: int, tau_m: float, r_E: float) -> np.ndarray:
    """Elementwise factors of one measurement window on ``C``."""
    gamma = np.ones((L, L), dtype=complex)
    phase = np.exp(1j * r_E * tau_m)
    gamma[0, 1:] = phase
    gamma[1:, 0] = np.conj(phase)
    return gamma


def measure_step(c, tau_m: float, r_E: float) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    return c * measurement_phases(c.shape[0], tau_m, r_E)


def vec(c) -> np.ndarray:
    """Row-major stacking: ``00, 01, ..., 0(L-1), 10, ..., (L-1)(L-1)``."""
    return np.asarray(c).reshape(-1)


def unvec(v) -> np.ndarray:
    v = np.asarray(v)
    L = int(round(np.sqrt(v.size)))
    if L * L != v.size:
        raise ShapeMismatch(f"vector of size {v.size} is not a square matrix")
    return v.reshape(L, L)


def superoperator_F(cfg: ChainConfig, tau: float, tau_m: float, r_E: float) -> np.ndarray:
    """L^2 x L^2 map of one free step plus one measurement on ``vec(C)``."""
    cfg.require_periodic("superoperator_F")
    u = _fourier_propagator(cfg, tau)
    kernel = np.kron(u.conj(), u)  # vec(A C B) = (A kron B^T) vec(C)
    return vec(measurement_phases(cfg.L, tau_m, r_E))[:, None] * kernel


# ---------------------------------------------------------------------------
# states and traces


def site_excitation(L: int, site: int = 0) -> np.ndarray:
    """One fermion localized on ``site``: the only nonzero entry is ``C[site, site] = 1``."""
    c = np.zeros((L, L), dtype=complex)
    c[site, site] = 1.0
    return c


def orbital_correlation(orbitals) -> np.ndarray:
    """Correlation matrix of a Slater determinant.

    ``orbitals`` holds orthonormal single-particle orbitals as columns (a
    1-D array is a single orbital).
    """
    phi = np.asarray(orbitals, dtype=complex)
    if phi.ndim == 1:
        phi = phi[:, None]
    return phi.conj() @ phi.T


def check_correlation(c, *, trace=None, tol: float = DRIFT_TOL, spectrum: bool = False) -> None:
    """Raise :class:`NumericDrift` if ``C`` is not a valid correlation matrix."""
    herm = max_abs(c - c.conj().T)
    if herm > tol:
        raise NumericDrift(f"correlation matrix lost hermiticity ({herm:.3e})")
    if trace is not None:
        drift = abs(np.trace(c) - trace)
        if drift > tol:
            raise NumericDrift(f"particle number drifted by {drift:.3e}")
    if spectrum:
        w = np.linalg.eigvalsh(0.5 * (c + c.conj().T))
        if w[0] < -SPECTRUM_TOL or w[-1] > 1 + SPECTRUM_TOL:
            raise NumericDrift(f"occupations outside [0, 1]: [{w[0]:.3e}, {w[-1]:.3e}]")


def run_trace(cfg: ChainConfig, meas: MeasurementConfig, sched: ZenoSchedule, c0=None,
              *, route: str = "direct", debug: bool = False) -> XxTrace:
    """Site-0 population trace over ``N`` cycles.

    Parameters
    ----------
    c0 : array, optional
        Initial correlation matrix; defaults to one excitation on site 0.
    route : {"direct", "fourier", "superoperator"}
        ``direct`` conjugates by a precomputed propagator (any boundary),
        ``fourier`` steps in mode space, ``superoperator`` reads
        ``(F^k vec C0)[0]`` with ``F^k`` from :func:`matpow`.
    debug : bool
        Also check occupation bounds every step (costs an eigensolve).
    """
    c = site_excitation(cfg.L) if c0 is None else check_hermitian(c0)
    if c.shape != (cfg.L, cfg.L):
        raise ShapeMismatch(f"initial correlation matrix must be {cfg.L}x{cfg.L}")
    check_correlation(c, spectrum=True)
    n_particles = np.trace(c)
    pops = np.empty(sched.N + 1)
    pops[0] = c[0, 0].real

    if route == "superoperator":
        f = superoperator_F(cfg, sched.tau, sched.tau_m, meas.r_E)
        v0 = vec(c)
        for k in range(1, sched.N + 1):
            pops[k] = (matpow(f, k)[0] @ v0).real
        c = unvec(matpow(f, sched.N) @ v0)
        check_correlation(c, trace=n_particles, spectrum=debug)
        return XxTrace(sched, pops, c)

    if route == "direct":
        u = free_propagator(cfg, sched.tau)
        free = lambda m: free_step_direct(m, sched.tau, cfg, propagator=u)  # noqa: E731
    elif route == "fourier":
        free = lambda m: free_step_fourier(m, sched.tau, cfg)  # noqa: E731
    else:
        raise ValueError(f"unknown route {route!r}")
    gamma = measurement_phases(cfg.L, sched.tau_m, meas.r_E)
    for k in range(1, sched.N + 1):
        c = free(c) * gamma
        check_correlation(c, trace=n_particles, spectrum=debug)
        pops[k] = c[0, 0].real
    return XxTrace(sched, pops, c)


def critical_times_xx(r_E: float, k_max: int) -> list[float]:
    """``2 k pi / |r_E|`` for ``k = 1..k_max``."""
    if r_E == 0:
        raise ZeroEigenvalue("r_E = 0 gives no critical measurement time")
    if int(k_max) != k_max or k_max < 1:
        raise ValueError(f"k_max must be a positive integer, got {k_max!r}")
    return [2 * k * np.pi / abs(r_E) for k in range(1, int(k_max) + 1)]
