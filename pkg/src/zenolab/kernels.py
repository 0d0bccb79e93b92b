"""Kernel backend selection.

The compiled extension ``zenolab._ckernels`` is used when it imports;
otherwise the NumPy fallback in ``zenolab._pykernels`` is used.  Both expose
the same functions with the same results up to rounding.
"""
from __future__ import annotations

from types import ModuleType

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_active: ModuleType = BACKENDS[BACKEND]


def available() -> list[str]:
    return list(BACKENDS)


def get(name: str | None = None) -> ModuleType:
    """Return the backend module called ``name`` (default: the active one)."""
    if name is None:
        return _active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available()}") from None


def use(name: str) -> None:
    """Switch the process-wide active backend."""
    global _active, BACKEND
    _active = get(name)
    BACKEND = name


def fock_hopping_coo(L, g, periodic):
    return _active.fock_hopping_coo(int(L), float(g), bool(periodic))


def single_particle_trace(u, psi0, phase, n_steps):
    u = np.ascontiguousarray(u, dtype=np.complex128)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    return _active.single_particle_trace(u, psi0, complex(phase), int(n_steps))
