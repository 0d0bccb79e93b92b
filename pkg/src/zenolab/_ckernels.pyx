# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels`` for the reference semantics."""
import numpy as np

cdef inline int _parity_below(long long state, int site) nogil:
    cdef long long mask = state & ((1LL << site) - 1)
    cdef int count = 0
    while mask:
        mask &= mask - 1
        count += 1
    return count & 1


def fock_hopping_coo(int L, double g, bint periodic):
    """COO triplets of ``g sum_bonds (c_i^dag c_j + c_j^dag c_i)`` on the 2^L Fock basis."""
    cdef int nbonds = L - 1 + (1 if periodic else 0)
    cdef long long dim = 1LL << L
    cdef Py_ssize_t cap = 2 * nbonds * (dim // 2)
    rows_arr = np.empty(cap, dtype=np.int64)
    cols_arr = np.empty(cap, dtype=np.int64)
    vals_arr = np.empty(cap, dtype=np.float64)
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t count = 0
    cdef long long s, s1
    cdef int b, d, i, j, sign
    with nogil:
        for b in range(nbonds):
            for d in range(2):
                if d == 0:
                    i = b
                    j = (b + 1) % L
                else:
                    i = (b + 1) % L
                    j = b
                for s in range(dim):
                    if not (s >> j) & 1 or (s >> i) & 1:
                        continue
                    sign = _parity_below(s, j)
                    s1 = s ^ (1LL << j)
                    sign ^= _parity_below(s1, i)
                    rows[count] = s1 | (1LL << i)
                    cols[count] = s
                    vals[count] = -g if sign else g
                    count += 1
    return rows_arr[:count], cols_arr[:count], vals_arr[:count]


def single_particle_trace(double complex[:, ::1] u, double complex[::1] psi0,
                          double complex phase, int n_steps):
    """Site-0 populations of ``psi -> phase_0 * (u @ psi)`` for ``n_steps`` steps."""
    cdef Py_ssize_t L = u.shape[0]
    cdef Py_ssize_t i, j
    cdef int k
    cdef double re, im, ur, ui, pr, pim
    # real and imaginary parts kept apart: C99 complex products go through
    # __muldc3 (inf/nan recovery) and would not vectorize
    ure_arr = np.ascontiguousarray(np.asarray(u).real)
    uim_arr = np.ascontiguousarray(np.asarray(u).imag)
    pre_arr = np.array(np.asarray(psi0).real)
    pim_arr = np.array(np.asarray(psi0).imag)
    tre_arr = np.empty(L)
    tim_arr = np.empty(L)
    out_arr = np.empty(n_steps + 1, dtype=np.float64)
    cdef double[:, ::1] ure = ure_arr
    cdef double[:, ::1] uim = uim_arr
    cdef double[::1] p_re = pre_arr
    cdef double[::1] p_im = pim_arr
    cdef double[::1] t_re = tre_arr
    cdef double[::1] t_im = tim_arr
    cdef double[::1] out = out_arr
    cdef double ph_re = phase.real
    cdef double ph_im = phase.imag
    out[0] = p_re[0] * p_re[0] + p_im[0] * p_im[0]
    with nogil:
        for k in range(n_steps):
            for i in range(L):
                re = 0.0
                im = 0.0
                for j in range(L):
                    ur = ure[i, j]
                    ui = uim[i, j]
                    re = re + ur * p_re[j] - ui * p_im[j]
                    im = im + ur * p_im[j] + ui * p_re[j]
                t_re[i] = re
                t_im[i] = im
            pr = t_re[0] * ph_re - t_im[0] * ph_im
            pim = t_re[0] * ph_im + t_im[0] * ph_re
            t_re[0] = pr
            t_im[0] = pim
            for i in range(L):
                p_re[i] = t_re[i]
                p_im[i] = t_im[i]
            out[k + 1] = p_re[0] * p_re[0] + p_im[0] * p_im[0]
    return out_arr
