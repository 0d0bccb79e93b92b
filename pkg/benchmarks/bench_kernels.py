"""Time the compiled and NumPy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best wall time per backend and the speedup of the
compiled kernel; outputs of the two backends are compared before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from zenolab import kernels
from zenolab.spectral import expm_unitary
from zenolab.xx import ChainConfig, hopping_matrix


def hopping_case(L):
    return f"fock_hopping_coo L={L}", (L, 1.0, True)


def trace_case(L, n_steps):
    u = expm_unitary(hopping_matrix(ChainConfig(L=L, g=5.0)), 1.0 / n_steps)
    psi0 = np.zeros(L, dtype=complex)
    psi0[0] = 1
    return f"single_particle_trace L={L} N={n_steps}", (u, psi0, np.exp(-5j), n_steps)


def same_result(name, a, b) -> bool:
    if name.startswith("fock"):
        order_a = np.lexsort((a[1], a[0]))
        order_b = np.lexsort((b[1], b[0]))
        return all(np.array_equal(x[order_a], y[order_b]) for x, y in zip(a, b))
    return bool(np.max(np.abs(a - b)) <= 1e-12)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    backends = kernels.available()
    if "cython" not in backends:
        print("compiled backend not built; only the NumPy fallback is available")
    cases = [hopping_case(L) for L in (10, 12, 14)]
    cases += [trace_case(30, 1_000), trace_case(30, 20_000), trace_case(120, 5_000)]

    print(f"{'kernel':42s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for label, call_args in cases:
        fn_name = label.split()[0]
        times, results = {}, {}
        for b in backends:
            fn = getattr(kernels.get(b), fn_name)
            results[b] = fn(*call_args)
            number = 1
            times[b] = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat)) / number
        if len(backends) > 1 and not same_result(label, results["cython"], results["python"]):
            raise SystemExit(f"backends disagree on {label}")
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:42s}" + "".join(f"{times[b] * 1e3:10.2f}ms" for b in backends) + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
