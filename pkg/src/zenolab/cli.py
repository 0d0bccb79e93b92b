"""``zeno`` command-line front end.

Exit codes: 0 ok, 2 configuration error, 3 numeric drift, 4 oracle
disagreement.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, parse_config
from .errors import ConfigError, NumericDrift, SizeLimit, ZeroEigenvalue
from .oracle import fock_simulate, single_particle_simulate
from .report import fmt, line_charts_svg, write_csv
from .xx import (
    ChainConfig,
    MeasurementConfig,
    critical_times_xx,
    free_propagator,
    measurement_phases,
    run_trace,
    site_excitation,
)
from .zeno import BlockSpectra, ZenoSchedule, critical_times, evolve_exact

EXIT_OK, EXIT_CONFIG, EXIT_DRIFT, EXIT_ORACLE = 0, 2, 3, 4
ORACLE_TOL = 1e-8
ORACLE_MAX_SITES = 10


def _out_dir(exp: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else exp.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_xx_run(exp: ExperimentConfig, args) -> int:
    trace = run_trace(exp.chain, exp.measurement, exp.schedule)
    out = _out_dir(exp, args)
    steps = np.arange(exp.schedule.N + 1)
    rows = zip(steps.tolist(), trace.times, trace.populations, trace.relative_fluctuation)
    path = write_csv(out / "xx_run.csv", ["step", "time", "population", "relative_fluctuation"], rows)
    print(f"wrote {path}")
    if args.plot or exp.plot:
        svg = line_charts_svg(out / "xx_run.svg", [
            (steps, trace.populations, "site-0 population", "measurement number k", "population"),
            (steps, trace.relative_fluctuation, "relative fluctuation", "measurement number k",
             "relative fluctuation"),
        ])
        print(f"wrote {svg}")
    return EXIT_OK


def _sweep_point(exp: ExperimentConfig, value: float):
    chain, meas, sched = exp.chain, exp.measurement, exp.schedule
    axis = exp.sweep_axis
    if axis == "tau_m":
        meas = dataclasses.replace(meas, tau_m=value)
        sched = ZenoSchedule(sched.N, sched.t, value)
    elif axis == "r_E":
        meas = dataclasses.replace(meas, r_E=value)
    elif axis == "N":
        sched = ZenoSchedule(int(value), sched.t, sched.tau_m)
    elif axis == "g":
        chain = dataclasses.replace(chain, g=value)
    trace = run_trace(chain, meas, sched)
    return trace.populations[-1], trace.relative_fluctuation[-1]


def cmd_xx_sweep(exp: ExperimentConfig, args) -> int:
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda v: _sweep_point(exp, v), exp.sweep_values))
    values = [int(v) if exp.sweep_axis == "N" else v for v in exp.sweep_values]
    rows = [(v, p, f) for v, (p, f) in zip(values, results)]
    path = write_csv(_out_dir(exp, args) / "xx_sweep.csv",
                     ["sweep_value", "final_population", "final_relative_fluctuation"], rows)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_generic_run(exp: ExperimentConfig, args) -> int:
    trace = evolve_exact(exp.model, exp.schedule)
    out = _out_dir(exp, args)
    steps = np.arange(exp.schedule.N + 1)
    rows = zip(steps.tolist(), trace.times, trace.expectation, trace.variance, trace.relative_fluctuation)
    path = write_csv(out / "generic_run.csv",
                     ["step", "time", "expectation", "variance", "relative_fluctuation"], rows)
    print(f"wrote {path}")
    if args.plot or exp.plot:
        svg = line_charts_svg(out / "generic_run.svg", [
            (steps, trace.expectation, "expectation of A", "measurement number k", "expectation"),
            (steps, trace.relative_fluctuation, "relative fluctuation", "measurement number k",
             "relative fluctuation"),
        ])
        print(f"wrote {svg}")
    return EXIT_OK


def cmd_critical(exp: ExperimentConfig, args) -> int:
    if exp.spectra is not None:
        if not exp.spectra or any(len(level) == 0 for level in exp.spectra) or len(exp.spectra) < 2:
            raise ConfigError("critical needs at least two nonempty block spectra")
        spectra = BlockSpectra.from_eigenvalues(exp.spectra)
    elif exp.model is not None:
        spectra = BlockSpectra.from_model(exp.model)
    else:
        r_e = exp.measurement.r_E
        critical_times_xx(r_e, exp.k_max)  # rejects r_E = 0
        spectra = BlockSpectra.from_eigenvalues([[0.0], [r_e]])
    result = critical_times(spectra, exp.k_max)
    for n, l, alpha, beta in result.degenerate:
        print(f"warning: DEGENERATE h_{alpha}({l}) == h_{beta}({n})", file=sys.stderr)
    rows = []
    for c in result.times:
        gens = ";".join(":".join(str(i) for i in g) for g in c.generators)
        rows.append((c.time, gens))
        print(f"{fmt(c.time)}\t{gens}")
    write_csv(_out_dir(exp, args) / "critical.csv", ["tau_m", "generators"], rows)
    return EXIT_OK


def _corrupted_populations(chain: ChainConfig, meas: MeasurementConfig, sched: ZenoSchedule):
    u = free_propagator(chain, sched.tau)
    gamma = measurement_phases(chain.L, sched.tau_m, meas.r_E)
    gamma[1:, 0] = np.conj(gamma[1:, 0])  # wrong sign on column 0
    c = site_excitation(chain.L)
    pops = [c[0, 0].real]
    for _ in range(sched.N):
        c = (u.conj() @ c @ u.T) * gamma
        pops.append(c[0, 0].real)
    return np.array(pops)


def cmd_oracle_check(exp: ExperimentConfig, args) -> int:
    chain, meas, sched = exp.chain, exp.measurement, exp.schedule
    if chain.L > ORACLE_MAX_SITES:
        raise SizeLimit(f"oracle-check supports at most {ORACLE_MAX_SITES} sites, got {chain.L}")
    if getattr(args, "corrupt_phase_sign", False):
        reference = _corrupted_populations(chain, meas, sched)
    else:
        reference = run_trace(chain, meas, sched).populations
    routes = {"fock": fock_simulate(chain, meas, sched, initial=1).populations,
              "single_particle": single_particle_simulate(chain, meas, sched)}
    if chain.periodic:
        routes["superoperator"] = run_trace(chain, meas, sched, route="superoperator").populations
    worst = 0.0
    for name, pops in routes.items():
        dev = float(np.max(np.abs(pops - reference)))
        worst = max(worst, dev)
        print(f"{name:16s} max |dp| = {dev:.3e}")
    ok = worst <= ORACLE_TOL
    print(f"{'PASS' if ok else 'FAIL'}: max deviation {worst:.3e} (tolerance {ORACLE_TOL:.0e})")
    return EXIT_OK if ok else EXIT_ORACLE


COMMANDS = {
    "xx-run": cmd_xx_run,
    "xx-sweep": cmd_xx_sweep,
    "generic-run": cmd_generic_run,
    "critical": cmd_critical,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zeno", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--plot", action="store_true", help="also write an SVG chart")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        if name == "oracle-check":
            p.add_argument("--corrupt-phase-sign", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        exp = parse_config(args.config, kind=args.command)
        return COMMANDS[args.command](exp, args)
    except (ConfigError, SizeLimit, ZeroEigenvalue) as exc:
        print(f"zeno: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericDrift as exc:
        print(f"zeno: numeric drift: {exc}", file=sys.stderr)
        return EXIT_DRIFT


if __name__ == "__main__":
    sys.exit(main())
