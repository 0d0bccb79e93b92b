"""Generic finite-dimensional engine for repeated QND measurements.

A system with free Hamiltonian ``H0`` (diagonal in the measured basis
``|s_n>``) and transition operator ``V`` is coupled to an apparatus through
the block Hamiltonian ``H_M = sum_n |s_n><s_n| (x) H(n)``.  One cycle is a
free step ``exp(-i tau (H0 + V))`` followed by a measurement window
``exp(-i tau_m H_M)`` during which only ``H_M`` acts.

Joint-space vectors are ordered system-major: index ``n * d_E + e``.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeMismatch
from .spectral import (
    SpectralDecomposition,
    check_hermitian,
    eig_hermitian,
    expm_unitary,
    max_abs,
)

log = logging.getLogger(__name__)

NORM_TOL = 1e-12
STATE_NORM_TOL = 1e-10
# |sin| below this counts as an exactly critical (unit) relative phase
CRITICAL_SIN_TOL = 1e-9
# |sin(theta/2)| below this switches geometric sums to their small-angle limit
UNIT_PHASE_TOL = 1e-12
DEGENERATE_GAP_TOL = 1e-12
DEDUP_RTOL = 1e-9

__all__ = [
    "BlockSpectra",
    "CriticalTime",
    "CriticalTimes",
    "QndModel",
    "Verdict",
    "VerdictKind",
    "ZenoSchedule",
    "ZenoTrace",
    "a_tn_first_order",
    "critical_times",
    "cycle_unitary",
    "evolve_exact",
    "expectation_and_fluctuation",
    "gamma_offdiag",
    "geometric_phase_sum",
    "phase_difference",
    "heisenberg_exact",
    "joint_hamiltonians",
    "lambda_mn",
    "observable",
    "x_operator",
    "zeno_verdict",
]


def _unit_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.complex128).ravel()
    if v.size == 0:
        raise ShapeMismatch(f"{name} is empty")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{name} has norm {norm!r}, expected 1 within {NORM_TOL}")
    return v


@dataclass(frozen=True, eq=False)
class QndModel:
    """System + apparatus description with a QND coupling.

    ``h0_diag`` and ``a_diag`` are the eigenvalues of ``H0`` and of the
    measured observable in the basis ``|s_n>``; since both are diagonal the
    QND conditions ``[H0, A] = [H0, H_M] = 0`` hold by construction.
    """

    h0_diag: np.ndarray
    a_diag: np.ndarray
    v: np.ndarray
    hm_blocks: tuple
    psi0_system: np.ndarray
    psi0_apparatus: np.ndarray

    def __post_init__(self):
        h0 = np.asarray(self.h0_diag, dtype=float).ravel()
        a = np.asarray(self.a_diag, dtype=float).ravel()
        d_s = h0.size
        if d_s < 1 or a.size != d_s:
            raise ShapeMismatch(f"h0_diag has {h0.size} entries but a_diag has {a.size}")
        v = check_hermitian(self.v)
        if v.shape != (d_s, d_s):
            raise ShapeMismatch(f"V must be {d_s}x{d_s}, got {v.shape}")
        if len(self.hm_blocks) != d_s:
            raise ShapeMismatch(f"need {d_s} measurement blocks, got {len(self.hm_blocks)}")
        blocks = tuple(check_hermitian(np.atleast_2d(b)) for b in self.hm_blocks)
        d_e = blocks[0].shape[0]
        if any(b.shape != (d_e, d_e) for b in blocks):
            raise ShapeMismatch("measurement blocks must share one apparatus dimension")
        psi_s = _unit_vector(self.psi0_system, "psi0_system")
        psi_e = _unit_vector(self.psi0_apparatus, "psi0_apparatus")
        if psi_s.size != d_s or psi_e.size != d_e:
            raise ShapeMismatch("initial state dimensions do not match the model")
        for name, value in [("h0_diag", h0), ("a_diag", a), ("v", v), ("hm_blocks", blocks),
                            ("psi0_system", psi_s), ("psi0_apparatus", psi_e)]:
            object.__setattr__(self, name, value)
        if self.v_hm_commutator_norm() < 1e-12:
            log.warning("[V, H_M] = 0: measurements cannot influence the dynamics")

    @classmethod
    def two_level(cls, omega: float, g: float, levels: Sequence[float],
                  psi0_system=(1.0, 0.0)) -> "QndModel":
        """Two-level system, ``H0 = diag(omega, 0)``, ``V = g sigma_x``,
        ``A = diag(1, 0)``, scalar apparatus blocks ``levels``."""
        return cls(
            h0_diag=np.array([omega, 0.0]),
            a_diag=np.array([1.0, 0.0]),
            v=g * np.array([[0.0, 1.0], [1.0, 0.0]]),
            hm_blocks=tuple(np.array([[x]]) for x in levels),
            psi0_system=np.asarray(psi0_system, dtype=complex),
            psi0_apparatus=np.array([1.0]),
        )

    @property
    def d_s(self) -> int:
        return self.h0_diag.size

    @property
    def d_e(self) -> int:
        return self.hm_blocks[0].shape[0]

    @property
    def initial_state(self) -> np.ndarray:
        return np.kron(self.psi0_system, self.psi0_apparatus)

    def v_hm_commutator_norm(self) -> float:
        # [V (x) I, H_M] has blocks V_nl (H(l) - H(n))
        worst = 0.0
        for n in range(self.d_s):
            for l in range(self.d_s):
                if n != l and self.v[n, l] != 0:
                    worst = max(worst, abs(self.v[n, l]) * max_abs(self.hm_blocks[l] - self.hm_blocks[n]))
        return worst


@dataclass(frozen=True)
class ZenoSchedule:
    """``N`` cycles of free step ``tau = t / N`` then a window ``tau_m``."""

    N: int
    t: float
    tau_m: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not np.isfinite(self.t) or self.t <= 0:
            raise ValueError(f"t must be positive, got {self.t!r}")
        if not np.isfinite(self.tau_m) or self.tau_m < 0:
            raise ValueError(f"tau_m must be nonnegative, got {self.tau_m!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def tau(self) -> float:
        return self.t / self.N

    def times(self) -> np.ndarray:
        """Wall-clock times ``t_k = k (tau + tau_m)`` for ``k = 0..N``."""
        return np.arange(self.N + 1) * (self.tau + self.tau_m)


def _relative(std: np.ndarray, mean: np.ndarray) -> np.ndarray:
    out = np.full(mean.shape, np.nan)
    ok = mean > 0
    out[ok] = std[ok] / mean[ok]
    return out


@dataclass(frozen=True)
class ZenoTrace:
    """Expectation and variance of ``A`` after each cycle, ``k = 0..N``.

    ``relative_fluctuation`` is NaN where the expectation is not positive.
    """

    schedule: ZenoSchedule
    expectation: np.ndarray
    variance: np.ndarray
    relative_fluctuation: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "relative_fluctuation",
                           _relative(np.sqrt(self.variance), self.expectation))

    @property
    def times(self) -> np.ndarray:
        return self.schedule.times()


# ---------------------------------------------------------------------------
# operators and states


def joint_hamiltonians(model: QndModel) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(H0 + V) (x) I_E`` and ``H_M = sum_n |s_n><s_n| (x) H(n)``."""
    eye_e = np.eye(model.d_e)
    h_sys = np.diag(model.h0_diag.astype(complex)) + model.v
    h_total = np.kron(h_sys, eye_e)
    d_e = model.d_e
    h_m = np.zeros((model.d_s * d_e,) * 2, dtype=complex)
    for n, block in enumerate(model.hm_blocks):
        h_m[n * d_e:(n + 1) * d_e, n * d_e:(n + 1) * d_e] = block
    return h_total, h_m


def observable(model: QndModel) -> np.ndarray:
    """``A (x) I_E`` on the joint space."""
    return np.kron(np.diag(model.a_diag.astype(complex)), np.eye(model.d_e))


def expectation_and_fluctuation(psi, a_diag) -> tuple[float, float]:
    """Mean and variance of a diagonal system observable in a joint pure state.

    The apparatus dimension is inferred from ``len(psi) / len(a_diag)``.
    The variance is clamped at zero.
    """
    a = np.asarray(a_diag, dtype=float).ravel()
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.size % a.size:
        raise ShapeMismatch(f"state of size {psi.size} is not a multiple of {a.size}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > STATE_NORM_TOL:
        raise ValueError(f"state norm {norm!r} deviates from 1 by more than {STATE_NORM_TOL}")
    p = np.sum(np.abs(psi.reshape(a.size, -1)) ** 2, axis=1)
    mean = float(p @ a)
    var = float(p @ (a - mean) ** 2)
    return mean, max(var, 0.0)


def evolve_exact(model: QndModel, sched: ZenoSchedule) -> ZenoTrace:
    """Propagate the joint pure state through ``[M(tau_m) U(tau)]^N``."""
    h_total, h_m = joint_hamiltonians(model)
    u_free = expm_unitary(h_total, sched.tau)
    u_meas = expm_unitary(h_m, sched.tau_m)
    step = u_meas @ u_free
    psi = model.initial_state
    mean = np.empty(sched.N + 1)
    var = np.empty(sched.N + 1)
    mean[0], var[0] = expectation_and_fluctuation(psi, model.a_diag)
    for k in range(1, sched.N + 1):
        psi = step @ psi
        mean[k], var[k] = expectation_and_fluctuation(psi, model.a_diag)
    return ZenoTrace(sched, mean, var)


def cycle_unitary(model: QndModel, sched: ZenoSchedule) -> np.ndarray:
    """The full evolution operator ``[M(tau_m) U(tau)]^N``."""
    h_total, h_m = joint_hamiltonians(model)
    step = expm_unitary(h_m, sched.tau_m) @ expm_unitary(h_total, sched.tau)
    return np.linalg.matrix_power(step, sched.N)


def heisenberg_exact(model: QndModel, sched: ZenoSchedule) -> np.ndarray:
    """Exact Heisenberg-picture observable ``U^dagger (A (x) I) U`` after N cycles."""
    u = cycle_unitary(model, sched)
    return u.conj().T @ observable(model) @ u


def x_operator(model: QndModel) -> np.ndarray:
    """Commutator ``X = [A, V]``, i.e. ``x_nl = (a_n - a_l) V_nl``."""
    a = model.a_diag
    return (a[:, None] - a[None, :]) * model.v


# ---------------------------------------------------------------------------
# block spectra and critical times


@dataclass(frozen=True)
class BlockSpectra:
    """Spectral decompositions of the apparatus blocks ``H(n)``."""

    blocks: tuple[SpectralDecomposition, ...]

    @classmethod
    def from_model(cls, model: QndModel) -> "BlockSpectra":
        return cls.from_blocks(model.hm_blocks)

    @classmethod
    def from_blocks(cls, blocks) -> "BlockSpectra":
        if len(blocks) < 1:
            raise ShapeMismatch("no blocks given")
        spectra = tuple(eig_hermitian(np.atleast_2d(b)) for b in blocks)
        if len({s.dim for s in spectra}) != 1:
            raise ShapeMismatch("blocks must share one apparatus dimension")
        return cls(spectra)

    @classmethod
    def from_eigenvalues(cls, levels) -> "BlockSpectra":
        """Diagonal blocks given by their eigenvalues, one sequence per level."""
        return cls.from_blocks([np.diag(np.asarray(x, dtype=float).ravel()) for x in levels])

    def __len__(self) -> int:
        return len(self.blocks)

    def eigenvalues(self, n: int) -> np.ndarray:
        return self.blocks[n].eigenvalues

    def overlap(self, n: int, l: int) -> np.ndarray:
        """``y_{beta alpha}(nl) = <sigma_beta(n)|sigma_alpha(l)>``."""
        return self.blocks[n].eigenvectors.conj().T @ self.blocks[l].eigenvectors

    def gaps(self):
        """Yield ``(n, l, alpha, beta, h_alpha(l) - h_beta(n))`` over ``n != l``."""
        for n in range(len(self)):
            for l in range(len(self)):
                if n == l:
                    continue
                for alpha, h_l in enumerate(self.eigenvalues(l)):
                    for beta, h_n in enumerate(self.eigenvalues(n)):
                        yield n, l, alpha, beta, float(h_l - h_n)


@dataclass(frozen=True)
class CriticalTime:
    time: float
    generators: tuple  # of (n, l, alpha, beta, k)


@dataclass(frozen=True)
class CriticalTimes:
    times: list
    degenerate: list  # (n, l, alpha, beta) with n < l and colliding eigenvalues

    @property
    def values(self) -> list[float]:
        return [c.time for c in self.times]

    def __len__(self) -> int:
        return len(self.times)


def critical_times(spectra: BlockSpectra, k_max: int) -> CriticalTimes:
    """All positive ``2 k pi / (h_alpha(l) - h_beta(n))`` for ``n != l``, ``k <= k_max``.

    Times that agree to a relative 1e-9 are merged and keep every
    generating index tuple.  Colliding cross-level eigenvalues are listed in
    ``degenerate`` instead of producing a time.
    """
    if int(k_max) != k_max or k_max < 1:
        raise ValueError(f"k_max must be a positive integer, got {k_max!r}")
    raw = []
    degenerate = []
    for n, l, alpha, beta, gap in spectra.gaps():
        if abs(gap) < DEGENERATE_GAP_TOL:
            if n < l:
                degenerate.append((n, l, alpha, beta))
        elif gap > 0:
            for k in range(1, int(k_max) + 1):
                raw.append((2 * k * np.pi / gap, (n, l, alpha, beta, k)))
    raw.sort(key=lambda item: item[0])
    merged: list[CriticalTime] = []
    for time, gen in raw:
        if merged and abs(time - merged[-1].time) <= DEDUP_RTOL * abs(merged[-1].time):
            last = merged[-1]
            merged[-1] = CriticalTime(last.time, last.generators + (gen,))
        else:
            merged.append(CriticalTime(time, (gen,)))
    return CriticalTimes(merged, degenerate)


class VerdictKind(enum.Enum):
    ZENO = "ZENO"
    CRITICAL = "CRITICAL"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    critical: tuple = ()  # (n, l, alpha, beta) with a unit relative phase
    degenerate: tuple = ()

    def __str__(self) -> str:
        return self.kind.value


def zeno_verdict(spectra: BlockSpectra, tau_m: float) -> Verdict:
    """Classify a measurement duration.

    DEGENERATE takes precedence over CRITICAL: a colliding eigenvalue pair
    has a unit relative phase for every ``tau_m``.
    """
    if not tau_m > 0:
        raise ValueError(f"tau_m must be positive, got {tau_m!r}")
    critical = []
    degenerate = []
    for n, l, alpha, beta, gap in spectra.gaps():
        if abs(gap) < DEGENERATE_GAP_TOL:
            if n < l:
                degenerate.append((n, l, alpha, beta))
        elif abs(np.sin(gap * tau_m / 2)) < CRITICAL_SIN_TOL:
            critical.append((n, l, alpha, beta))
    if degenerate:
        kind = VerdictKind.DEGENERATE
    elif critical:
        kind = VerdictKind.CRITICAL
    else:
        kind = VerdictKind.ZENO
    return Verdict(kind, tuple(critical), tuple(degenerate))


# ---------------------------------------------------------------------------
# closed forms


# Phase arguments such as N*theta/2 reach ~1e3 rad, where a plain double
# product already carries ~1e-13 of absolute error; the geometric sums below
# amplify that by up to 1/|sin(theta/2)|. Angles are therefore carried as
# unevaluated double-double pairs (hi + lo) and reduced modulo 2 pi before
# any trigonometric call.
_SPLITTER = 134217729.0  # 2**27 + 1
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_scale(x, hi, lo):
    """``x * (hi + lo)`` as a double-double pair."""
    p, e = _two_prod(x, hi)
    return _two_sum(p, e + x * lo)


def _reduce(hi, lo, period_hi=_TWO_PI_HI, period_lo=_TWO_PI_LO):
    """``hi + lo`` minus the nearest multiple ``n`` of the period; returns ``(r, n)``."""
    n = np.round(hi / period_hi)
    a, b = _two_prod(n, period_hi)
    return (hi - a) - b + lo - n * period_lo, n


def _sin(hi, lo):
    """``sin(hi + lo)``, evaluated near zero so that it keeps relative accuracy."""
    r, n = _reduce(hi, lo, _TWO_PI_HI / 2, _TWO_PI_LO / 2)
    return np.where(n % 2 == 0, 1.0, -1.0) * np.sin(r)


def phase_difference(tau_m: float, a, b):
    """``tau_m * (a - b)`` as a double-double pair ``(hi, lo)``."""
    d, dl = _two_sum(np.asarray(a, dtype=float), -np.asarray(b, dtype=float))
    p, e = _two_prod(float(tau_m), d)
    return _two_sum(p, e + tau_m * dl)


def geometric_phase_sum(theta, N: int, start: int = 0, theta_lo=0.0) -> np.ndarray:
    """Closed form of ``sum_{k=start}^{start+N-1} exp(-i k theta)``.

    Uses ``sin(N theta/2) / sin(theta/2)`` times the centre phase, with every
    angle reduced modulo 2 pi in double-double arithmetic. ``theta_lo`` carries
    the low part of ``theta`` when it comes from :func:`phase_difference`.
    Where ``|sin(theta/2)| < 1e-12`` the ratio is replaced by its limit: with
    ``delta = theta mod 2 pi`` the sum is ``N exp(-i delta centre)``.
    """
    hi = np.asarray(theta, dtype=float)
    lo = np.broadcast_to(np.asarray(theta_lo, dtype=float), hi.shape)
    hi, lo = _two_sum(hi, lo)
    centre = start + (N - 1) / 2
    half = _sin(*_dd_scale(0.5, hi, lo))
    unit = np.abs(half) < UNIT_PHASE_TOL
    safe = np.where(unit, 1.0, half)
    rotation = np.exp(-1j * _reduce(*_dd_scale(centre, hi, lo))[0])
    value = _sin(*_dd_scale(N / 2, hi, lo)) / safe * rotation
    limit = N * np.exp(-1j * _reduce(hi, lo)[0] * centre)
    return np.where(unit, limit, value)


def a_tn_first_order(model: QndModel, sched: ZenoSchedule) -> np.ndarray:
    """Heisenberg observable after N cycles, to first order in ``tau``.

    ``A (x) I - i tau sum_{n != l} x_nl V_n (Y(nl) o S(nl)) V_l^dagger`` placed
    in block ``(n, l)``, where ``S`` holds the geometric sums
    ``sum_{j<N} exp(-i (h_alpha(l) - h_beta(n)) j tau_m)``.
    """
    if not sched.tau_m > 0:
        raise ValueError("a_tn_first_order needs tau_m > 0")
    spectra = BlockSpectra.from_model(model)
    x = x_operator(model)
    d_e = model.d_e
    out = observable(model)
    for n in range(model.d_s):
        vn = spectra.blocks[n].eigenvectors
        hn = spectra.eigenvalues(n)
        for l in range(model.d_s):
            if n == l or x[n, l] == 0:
                continue
            vl = spectra.blocks[l].eigenvectors
            hl = spectra.eigenvalues(l)
            theta, theta_lo = phase_difference(sched.tau_m, hl[None, :], hn[:, None])  # [beta, alpha]
            s = geometric_phase_sum(theta, sched.N, theta_lo=theta_lo)
            block = vn @ (spectra.overlap(n, l) * s) @ vl.conj().T
            out[n * d_e:(n + 1) * d_e, l * d_e:(l + 1) * d_e] += -1j * sched.tau * x[n, l] * block
    return out


def lambda_mn(spectra: BlockSpectra, m: int, n: int, tau_m: float, N: int) -> np.ndarray:
    """``sum_{k=1}^N exp(-i k tau_m H(m)) exp(i k tau_m H(n))`` in closed form.

    Returned as a d_E x d_E operator in the apparatus basis.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    vm = spectra.blocks[m].eigenvectors
    vn = spectra.blocks[n].eigenvectors
    theta, theta_lo = phase_difference(tau_m, spectra.eigenvalues(m)[:, None], spectra.eigenvalues(n)[None, :])
    s = geometric_phase_sum(theta, int(N), start=1, theta_lo=theta_lo)
    return vm @ (spectra.overlap(m, n) * s) @ vn.conj().T


def gamma_offdiag(model: QndModel, tau_m: float, N: int) -> tuple[np.ndarray, float]:
    """Off-diagonal suppressor ``Gamma = sum_{m != n} Lambda_mn V_mn |s_m><s_n|``.

    Returns ``Gamma`` on the joint space and ``max|Gamma| / N``, which tends
    to zero off-critical and stays finite at a critical time.
    """
    spectra = BlockSpectra.from_model(model)
    d_e = model.d_e
    gamma = np.zeros((model.d_s * d_e,) * 2, dtype=complex)
    for m in range(model.d_s):
        for n in range(model.d_s):
            if m == n or model.v[m, n] == 0:
                continue
            gamma[m * d_e:(m + 1) * d_e, n * d_e:(n + 1) * d_e] = (
                model.v[m, n] * lambda_mn(spectra, m, n, tau_m, N))
    return gamma, max_abs(gamma) / N
