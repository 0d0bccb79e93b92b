"""Pure-Python/NumPy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def _parity_below(states, site):
    below = states & ((1 << site) - 1)
    parity = np.zeros_like(states)
    for b in range(site):
        parity ^= (below >> b) & 1
    return parity


def fock_hopping_coo(L, g, periodic):
    """COO triplets of ``g sum_bonds (c_i^dag c_j + c_j^dag c_i)`` on the 2^L Fock basis.

    Bit ``n`` of a basis index is the occupation of site ``n``; ``c_n`` picks
    up ``(-1)**(occupied sites below n)``.
    """
    states = np.arange(1 << L, dtype=np.int64)
    bonds = [(b, (b + 1) % L) for b in range(L - 1 + (1 if periodic else 0))]
    rows, cols, vals = [], [], []
    for b, c in bonds:
        for i, j in ((b, c), (c, b)):
            s = states[((states >> j) & 1 == 1) & ((states >> i) & 1 == 0)]
            s1 = s ^ (1 << j)
            sign = _parity_below(s, j) ^ _parity_below(s1, i)
            rows.append(s1 | (1 << i))
            cols.append(s)
            vals.append(np.where(sign == 1, -g, g).astype(float))
    if not rows:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def single_particle_trace(u, psi0, phase, n_steps):
    """Site-0 populations of ``psi -> phase_0 * (u @ psi)`` for ``n_steps`` steps."""
    psi = np.array(psi0, dtype=np.complex128)
    out = np.empty(n_steps + 1)
    out[0] = abs(psi[0]) ** 2
    for k in range(n_steps):
        psi = u @ psi
        psi[0] *= phase
        out[k + 1] = abs(psi[0]) ** 2
    return out
