import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unitary
from zenolab.errors import NumericDrift, ShapeMismatch, ZeroEigenvalue
from zenolab.spectral import max_abs, unitarity_error
from zenolab.xx import (
    Boundary,
    ChainConfig,
    MeasurementConfig,
    critical_times_xx,
    dispersion,
    free_step_direct,
    free_step_fourier,
    hopping_matrix,
    measure_step,
    orbital_correlation,
    relative_fluctuation,
    run_trace,
    site_excitation,
    superoperator_F,
    unvec,
    vec,
)
from zenolab.zeno import BlockSpectra, ZenoSchedule, critical_times

OPEN, PERIODIC = Boundary.OPEN, Boundary.PERIODIC


def random_correlation(rng, L, n_particles=None):
    """Valid correlation matrix: random orbitals with occupations in [0, 1]."""
    q = random_unitary(rng, L)
    occ = rng.uniform(size=L) if n_particles is None else (np.arange(L) < n_particles).astype(float)
    return q.conj() @ np.diag(occ) @ q.T


def explicit_kernel_step(c, tau, cfg):
    """Free step through the full L^4 lattice kernel, summed term by term."""
    L = cfg.L
    eps = np.array([dispersion(cfg, k) for k in range(L)])
    out = np.zeros((L, L), dtype=complex)
    for n in range(L):
        for m in range(L):
            for x in range(L):
                for y in range(L):
                    f = 0j
                    for k in range(L):
                        for q in range(L):
                            f += np.exp(2j * np.pi * ((m - y) * q - (n - x) * k) / L
                                        + 1j * (eps[k] - eps[q]) * tau) / L ** 2
                    out[n, m] += f * c[x, y]
    return out


# ---------------------------------------------------------------------------
# configuration


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(L=1, g=1.0)
    with pytest.raises(ValueError):
        ChainConfig(L=4, g=float("nan"))
    with pytest.raises(ValueError):
        MeasurementConfig(r_E=5.0, tau_m=-0.1)
    assert ChainConfig(L=3, g=1.0).periodic
    assert ChainConfig(L=3, g=1.0).omega == 0.0


# ---------------------------------------------------------------------------
# hopping and dispersion


def test_hopping_two_site_open():
    h = hopping_matrix(ChainConfig(L=2, g=1.0, boundary=OPEN))
    assert np.array_equal(h, [[0, 1], [1, 0]])


def test_hopping_wrap_bond():
    h = hopping_matrix(ChainConfig(L=3, g=5.0))
    assert h[0, 2] == 5 and h[2, 0] == 5
    assert hopping_matrix(ChainConfig(L=3, g=5.0, boundary=OPEN))[0, 2] == 0


def test_hopping_four_site_spectrum():
    cfg = ChainConfig(L=4, g=1.5, omega=0.3)
    w = np.linalg.eigvalsh(hopping_matrix(cfg))
    expected = sorted([0.3 + 3.0, 0.3, 0.3 - 3.0, 0.3])
    assert np.allclose(w, expected, atol=1e-12)


def test_dispersion_values():
    assert dispersion(ChainConfig(L=7, g=5.0), 0) == pytest.approx(10.0)
    assert dispersion(ChainConfig(L=4, g=1.0, omega=1.0), 1) == pytest.approx(1.0, abs=1e-15)


def test_dispersion_matches_eigensolver_l30():
    cfg = ChainConfig(L=30, g=5.0)
    eps = np.sort([dispersion(cfg, k) for k in range(30)])
    assert np.max(np.abs(eps - np.linalg.eigvalsh(hopping_matrix(cfg)))) <= 1e-10


def test_dispersion_rejects_open_and_bad_index():
    with pytest.raises(ValueError):
        dispersion(ChainConfig(L=4, g=1.0, boundary=OPEN), 0)
    with pytest.raises(ValueError):
        dispersion(ChainConfig(L=4, g=1.0), 4)


# ---------------------------------------------------------------------------
# free steps


def test_fourier_step_at_zero_time_is_identity(rng):
    cfg = ChainConfig(L=5, g=2.0)
    c = random_correlation(rng, 5)
    assert max_abs(free_step_fourier(c, 0.0, cfg) - c) <= 1e-14
    assert max_abs(free_step_direct(c, 0.0, cfg) - c) <= 1e-14


def test_zero_momentum_mode_is_stationary():
    cfg = ChainConfig(L=6, g=1.3, omega=0.4)
    c = np.full((6, 6), 1 / 6, dtype=complex)
    for tau in (0.1, 0.77, 3.0):
        assert max_abs(free_step_fourier(c, tau, cfg) - c) <= 1e-13


def test_fourier_matches_direct_single_site():
    cfg = ChainConfig(L=4, g=1.0)
    c = site_excitation(4)
    assert max_abs(free_step_fourier(c, 0.3, cfg) - free_step_direct(c, 0.3, cfg)) <= 1e-12


def test_fourier_matches_direct_seeded(rng):
    cfg = ChainConfig(L=6, g=0.9, omega=-0.4)
    c = random_correlation(rng, 6)
    assert max_abs(free_step_fourier(c, 0.45, cfg) - free_step_direct(c, 0.45, cfg)) <= 1e-12


@pytest.mark.parametrize("L", [2, 3, 4, 5, 6])
def test_fourier_matches_explicit_lattice_kernel(rng, L):
    cfg = ChainConfig(L=L, g=1.1, omega=0.2)
    c = random_correlation(rng, L)
    assert max_abs(free_step_fourier(c, 0.37, cfg) - explicit_kernel_step(c, 0.37, cfg)) <= 1e-12


@pytest.mark.parametrize("tau", [0.0, 0.2, 0.9, 2.5])
def test_two_site_rabi(tau):
    g = 1.7
    c = free_step_direct(np.diag([1.0, 0.0]).astype(complex), tau, ChainConfig(L=2, g=g, boundary=OPEN))
    assert c[0, 0].real == pytest.approx(np.cos(g * tau) ** 2, abs=1e-14)


def test_fourier_step_requires_periodic(rng):
    with pytest.raises(ValueError):
        free_step_fourier(site_excitation(4), 0.1, ChainConfig(L=4, g=1.0, boundary=OPEN))


# ---------------------------------------------------------------------------
# measurement step and superoperator


def test_measure_step_critical_phase_is_identity(rng):
    c = random_correlation(rng, 5)
    assert max_abs(measure_step(c, 2 * np.pi / 5, 5.0) - c) <= 1e-14
    assert np.array_equal(measure_step(c, 0.8, 0.0), c)


def test_measure_step_touches_only_row_and_column_zero(rng):
    c = random_correlation(rng, 5)
    out = measure_step(c, 0.61, 5.0)
    assert out[0, 0] == c[0, 0]
    assert np.array_equal(out[1:, 1:], c[1:, 1:])
    assert np.allclose(out[0, 1:], c[0, 1:] * np.exp(1j * 5.0 * 0.61), atol=0)
    assert np.allclose(out[1:, 0], c[1:, 0] * np.exp(-1j * 5.0 * 0.61), atol=0)


def test_superoperator_identity_at_zero_times():
    f = superoperator_F(ChainConfig(L=4, g=2.0), 0.0, 0.0, 5.0)
    assert max_abs(f - np.eye(16)) <= 1e-14


def test_superoperator_is_unitary():
    f = superoperator_F(ChainConfig(L=5, g=5.0, omega=0.3), 0.01, 1.0, 5.0)
    assert unitarity_error(f) <= 1e-10


def test_superoperator_matches_step_composition(rng):
    cfg = ChainConfig(L=3, g=1.2)
    c = random_correlation(rng, 3)
    f = superoperator_F(cfg, 0.3, 0.7, 5.0)
    by_steps = measure_step(free_step_fourier(c, 0.3, cfg), 0.7, 5.0)
    assert max_abs(unvec(f @ vec(c)) - by_steps) <= 1e-12


def test_vec_is_row_major(rng):
    c = random_correlation(rng, 3)
    v = vec(c)
    assert v[1] == c[0, 1] and v[3] == c[1, 0]
    assert np.array_equal(unvec(v), c)
    with pytest.raises(ShapeMismatch):
        unvec(np.zeros(5))


# ---------------------------------------------------------------------------
# traces


def test_no_hopping_keeps_population():
    tr = run_trace(ChainConfig(L=5, g=0.0), MeasurementConfig(5.0, 1.0), ZenoSchedule(20, 1.0, 1.0))
    assert np.all(np.abs(tr.populations - 1) <= 1e-14)
    assert np.all(tr.relative_fluctuation <= 1e-7)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_critical_trace_equals_free_decay(k):
    cfg = ChainConfig(L=12, g=5.0)
    tau_m = 2 * k * np.pi / 5
    sched = ZenoSchedule(40, 1.0, tau_m)
    measured = run_trace(cfg, MeasurementConfig(5.0, tau_m), sched)
    free = run_trace(cfg, MeasurementConfig(5.0, 0.0), sched)
    assert np.max(np.abs(measured.populations - free.populations)) <= 1e-10


@pytest.mark.parametrize("route", ["fourier", "superoperator"])
def test_routes_agree(route):
    cfg = ChainConfig(L=8, g=5.0)
    meas, sched = MeasurementConfig(5.0, 1.0), ZenoSchedule(30, 1.0, 1.0)
    ref = run_trace(cfg, meas, sched).populations
    assert np.max(np.abs(run_trace(cfg, meas, sched, route=route).populations - ref)) <= 1e-9


def test_open_chain_trace_runs():
    tr = run_trace(ChainConfig(L=6, g=2.0, boundary=OPEN), MeasurementConfig(5.0, 0.5),
                   ZenoSchedule(10, 1.0, 0.5))
    assert np.all((tr.populations >= 0) & (tr.populations <= 1 + 1e-10))


def test_omega_invariance():
    meas, sched = MeasurementConfig(5.0, 1.0), ZenoSchedule(50, 1.0, 1.0)
    a = run_trace(ChainConfig(L=10, g=5.0, omega=0.0), meas, sched)
    b = run_trace(ChainConfig(L=10, g=5.0, omega=3.7), meas, sched)
    assert np.max(np.abs(a.populations - b.populations)) <= 1e-10
    assert np.max(np.abs(a.relative_fluctuation - b.relative_fluctuation)) <= 1e-10


def test_deficit_shrinks_as_measurements_densify():
    cfg, meas = ChainConfig(L=30, g=5.0), MeasurementConfig(5.0, 1.0)
    deficits = [1 - run_trace(cfg, meas, ZenoSchedule(n, 1.0, 1.0)).populations[-1]
                for n in (25, 50, 100, 200)]
    for before, after in zip(deficits, deficits[1:]):
        assert after <= 1.05 * before


def test_multi_particle_trace_conserves_number(rng):
    cfg = ChainConfig(L=6, g=1.0)
    c0 = random_correlation(rng, 6, n_particles=3)
    tr = run_trace(cfg, MeasurementConfig(5.0, 0.4), ZenoSchedule(25, 2.0, 0.4), c0, debug=True)
    assert abs(np.trace(tr.final) - 3) <= 1e-10


def test_invalid_initial_matrix_is_rejected():
    cfg = ChainConfig(L=3, g=1.0)
    with pytest.raises(NumericDrift):
        run_trace(cfg, MeasurementConfig(5.0, 1.0), ZenoSchedule(3, 1.0, 1.0), np.diag([2.0, 0, 0]))
    with pytest.raises(ShapeMismatch):
        run_trace(cfg, MeasurementConfig(5.0, 1.0), ZenoSchedule(3, 1.0, 1.0), np.eye(4))
    with pytest.raises(ValueError):
        run_trace(cfg, MeasurementConfig(5.0, 1.0), ZenoSchedule(3, 1.0, 1.0), route="nope")


def test_orbital_correlation_of_one_orbital():
    psi = np.array([0.6, 0.8j])
    c = orbital_correlation(psi[:, None])
    assert np.allclose(c, np.conj(psi)[:, None] * psi[None, :])
    assert np.trace(c).real == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# fluctuation and critical times


@pytest.mark.parametrize("p, expected", [(1.0, 0.0), (0.5, 1.0), (0.8, 0.5)])
def test_relative_fluctuation_values(p, expected):
    assert relative_fluctuation(p) == pytest.approx(expected, abs=1e-15)


def test_relative_fluctuation_undefined_and_invalid():
    assert np.isnan(relative_fluctuation(0.0))
    with pytest.raises(ValueError):
        relative_fluctuation(1.1)


def test_trace_flags_vanishing_population():
    tr = run_trace(ChainConfig(L=2, g=1.0, boundary=OPEN), MeasurementConfig(0.0, 0.0),
                   ZenoSchedule(2, np.pi, 0.0))
    # one full Rabi half-period empties site 0 at t = pi/2
    assert not tr.defined[1] and np.isnan(tr.relative_fluctuation[1])
    assert tr.defined[0] and tr.defined[2]


def test_critical_times_xx_values():
    assert critical_times_xx(5.0, 1) == pytest.approx([2 * np.pi / 5])
    assert critical_times_xx(5.0, 3) == pytest.approx([2 * np.pi / 5, 4 * np.pi / 5, 6 * np.pi / 5])
    with pytest.raises(ZeroEigenvalue):
        critical_times_xx(0.0, 2)


@pytest.mark.parametrize("r_e", [5.0, -3.0, 0.7])
def test_critical_times_xx_match_generic_engine(r_e):
    generic = critical_times(BlockSpectra.from_eigenvalues([[0.0], [r_e]]), 4).values
    assert np.max(np.abs(np.asarray(critical_times_xx(r_e, 4)) - generic)) <= 1e-12


# ---------------------------------------------------------------------------
# invariants


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), L=st.integers(2, 7),
       tau=st.floats(0, 3), tau_m=st.floats(0, 3), r_e=st.floats(-10, 10),
       omega=st.floats(-5, 5), g=st.floats(-5, 5))
def test_steps_preserve_correlation_invariants(seed, L, tau, tau_m, r_e, omega, g):
    rng = np.random.default_rng(seed)
    c = random_correlation(rng, L)
    cfg = ChainConfig(L=L, g=g, omega=omega)
    n0 = np.trace(c)
    for _ in range(3):
        c = measure_step(free_step_fourier(c, tau, cfg), tau_m, r_e)
        assert max_abs(c - c.conj().T) <= 1e-10
        assert abs(np.trace(c) - n0) <= 1e-10
        w = np.linalg.eigvalsh(c)
        assert w[0] >= -1e-10 and w[-1] <= 1 + 1e-10


def test_many_random_steps_stay_valid(rng):
    cfg = ChainConfig(L=6, g=5.0)
    c = random_correlation(rng, 6, n_particles=2)
    steps = rng.uniform(0, 0.5, size=(10_000, 2))
    for tau, tau_m in steps:
        c = measure_step(free_step_direct(c, tau, cfg), tau_m, 5.0)
    assert max_abs(c - c.conj().T) <= 1e-10
    assert abs(np.trace(c) - 2) <= 1e-10
    w = np.linalg.eigvalsh(c)
    assert w[0] >= -1e-10 and w[-1] <= 1 + 1e-10
