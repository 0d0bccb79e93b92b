"""Brute-force validators for the XX-chain engine.

Two independent routes to the site-0 population: the full many-body Fock
space (bitmask basis, bit ``n`` = occupation of site ``n``) and a single
fermion wavefunction.  Neither uses the correlation-matrix step functions
of :mod:`zenolab.xx`; the only shared code is the spectral kernel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SizeLimit
from .spectral import expm_unitary
from .xx import ChainConfig, MeasurementConfig
from .zeno import ZenoSchedule

MAX_SITES = 14
FULL_SPACE_SITES = 10

__all__ = [
    "FockTrace",
    "fock_hamiltonian",
    "fock_hamiltonian_matrix",
    "fock_sector",
    "fock_simulate",
    "single_particle_simulate",
]


def _check_size(L: int) -> None:
    if L > MAX_SITES:
        raise SizeLimit(f"Fock oracle supports at most {MAX_SITES} sites, got {L}")
    if L < 1:
        raise ValueError("need at least one site")


def _popcount(states: np.ndarray) -> np.ndarray:
    return np.array([bin(int(s)).count("1") for s in states], dtype=np.int64)


def fock_hamiltonian_matrix(L: int, omega: float, g: float, periodic: bool) -> np.ndarray:
    """Second-quantized ``sum omega n_j + g (c_j^dag c_{j+1} + h.c.)`` on 2^L states.

    ``c_j`` carries the sign ``(-1)**(occupied sites below j)``.  A periodic
    chain includes the bond ``(L-1, 0)``; for ``L = 2`` that bond coincides
    with ``(0, 1)`` and the amplitudes add.
    """
    _check_size(L)
    dim = 1 << L
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = omega * _popcount(np.arange(dim))
    if L >= 2:
        rows, cols, vals = kernels.fock_hopping_coo(L, g, periodic)
        np.add.at(h, (rows, cols), vals)
    return h


def fock_hamiltonian(cfg: ChainConfig) -> np.ndarray:
    return fock_hamiltonian_matrix(cfg.L, cfg.omega, cfg.g, cfg.periodic)


def fock_sector(h: np.ndarray, n_particles: int) -> tuple[np.ndarray, np.ndarray]:
    """Restrict a number-conserving Fock operator to one particle-number sector.

    Returns the basis bitmasks and the sector block.
    """
    dim = h.shape[0]
    states = np.flatnonzero(_popcount(np.arange(dim)) == n_particles)
    return states, h[np.ix_(states, states)]


@dataclass(frozen=True)
class FockTrace:
    """``<n_0>`` and ``<n_0^2> - <n_0>^2`` for ``k = 0..N``; ``final`` is the last state."""

    populations: np.ndarray
    variance: np.ndarray
    final: np.ndarray
    basis: np.ndarray  # bitmasks indexing ``final``


def fock_simulate(cfg: ChainConfig, meas: MeasurementConfig, sched: ZenoSchedule,
                  initial: int = 1, *, sector_only: bool | None = None) -> FockTrace:
    """Many-body propagation from the occupation bitmask ``initial``.

    By default the full 2^L space is used up to 10 sites; ``sector_only``
    restricts to the particle-number sector of ``initial`` (exact, since the
    dynamics conserve number).
    """
    _check_size(cfg.L)
    if not 0 <= initial < (1 << cfg.L):
        raise ValueError(f"bitmask {initial} out of range for L={cfg.L}")
    if sector_only is None:
        sector_only = cfg.L > FULL_SPACE_SITES
    h = fock_hamiltonian(cfg)
    if sector_only:
        basis, h = fock_sector(h, bin(initial).count("1"))
    else:
        basis = np.arange(1 << cfg.L)
    psi = (basis == initial).astype(complex)
    n0 = (basis & 1).astype(float)

    u = expm_unitary(h, sched.tau)
    meas_phase = np.exp(-1j * meas.r_E * sched.tau_m * n0)
    pops = np.empty(sched.N + 1)
    pops[0] = n0 @ np.abs(psi) ** 2
    second = np.empty(sched.N + 1)
    second[0] = pops[0]
    for k in range(1, sched.N + 1):
        psi = meas_phase * (u @ psi)
        prob = np.abs(psi) ** 2
        pops[k] = n0 @ prob
        second[k] = (n0 * n0) @ prob
    return FockTrace(pops, second - pops ** 2, psi, basis)


def single_particle_simulate(cfg: ChainConfig, meas: MeasurementConfig, sched: ZenoSchedule,
                             start_site: int = 0) -> np.ndarray:
    """Site-0 population of one fermion started on ``start_site``, ``k = 0..N``."""
    L = cfg.L
    h = np.diag(np.full(L, cfg.omega, dtype=complex))
    for n in range(L if cfg.periodic else L - 1):
        h[n, (n + 1) % L] += cfg.g
        h[(n + 1) % L, n] += cfg.g
    u = expm_unitary(h, sched.tau)
    psi0 = np.zeros(L, dtype=complex)
    psi0[start_site] = 1.0
    return kernels.single_particle_trace(u, psi0, np.exp(-1j * meas.r_E * sched.tau_m), sched.N)
