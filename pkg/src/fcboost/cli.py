"""Command-line front end.

Subcommands: simulate (presets or scenario files, with overrides and an
optional parallel parameter sweep), equilibrium (steady-state solve for a
setpoint), fit (curve constants from a samples CSV), presets (list).

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 infeasible equilibrium.  Errors print one machine-readable JSON line on
stderr.  The output directory defaults to ./out, overridable by the
FCBOOST_OUT environment variable and the --out flag (flag wins).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import scenario_io
from .controller import PiGains
from .equilibrium import InfeasibleSetpointError, solve_equilibrium
from .estimator import EstimatorGains
from .pemfc import (
    CurveRangeError,
    SolverConvergenceError,
    fit_polarization,
    read_polarization_csv,
    vfc,
)
from .sim import (
    ADAPTIVE,
    PRESET_NOTES,
    Scenario,
    SimulationAbort,
    nominal_params,
    preset,
    preset_names,
    resolve,
    run_scenario,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4

SWEEP_KEYS = ("kp", "ki", "k")


@dataclass
class RunConfig:
    """Resolved settings of one simulate invocation."""

    scenario: Scenario
    outdir: Path
    plot: bool


def _fail(kind: str, message: str, code: int, time: float | None = None) -> int:
    payload = {"error": message, "kind": kind}
    if time is not None:
        payload["time"] = time
    print(json.dumps(payload), file=sys.stderr)
    return code


def _default_outdir(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("FCBOOST_OUT")
    if env:
        return Path(env)
    return Path("out")


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if args.kp is not None or args.ki is not None:
        kp = args.kp if args.kp is not None else sc.gains.K_P
        ki = args.ki if args.ki is not None else sc.gains.K_I
        sc = replace(sc, gains=PiGains(K_P=kp, K_I=ki))
    if args.k1 is not None or args.k2 is not None:
        if sc.mode != ADAPTIVE:
            raise ValueError("estimator gains apply to adaptive scenarios only")
        k1 = args.k1 if args.k1 is not None else sc.est_gains.k1
        k2 = args.k2 if args.k2 is not None else sc.est_gains.k2
        sc = replace(sc, est_gains=EstimatorGains(k1=k1, k2=k2))
    if args.step is not None:
        sc = replace(sc, step=args.step)
    if args.duration is not None:
        sc = replace(sc, duration=args.duration)
    if args.decimation is not None:
        sc = replace(sc, decimation=args.decimation)
    if args.setpoint is not None:
        sc = replace(sc, setpoints=scenario_io._parse_schedule(args.setpoint, "setpoint"))
    if args.load is not None:
        sc = replace(sc, loads=scenario_io._parse_schedule(args.load, "load"))
    sc.validate()
    return sc


def _run_one(scenario_text: str, outdir_s: str, plot: bool) -> dict:
    """Worker for one simulation; also the sweep subprocess entry point."""
    sc = scenario_io.loads(scenario_text)
    outdir = Path(outdir_s)
    outdir.mkdir(parents=True, exist_ok=True)
    sc = resolve(sc)
    trace = run_scenario(sc)
    write_trace_csv(trace, outdir / "trace.csv")
    scenario_io.dump(sc, outdir / "effective_config.txt")
    plot_files: list[str] = []
    plot_error = None
    if plot:
        try:
            from . import plots

            plot_files = plots.render_all(trace, outdir)
        except Exception as exc:  # plotting must never fail the numeric pipeline
            plot_error = f"{type(exc).__name__}: {exc}"
    return {
        "outdir": str(outdir),
        "samples": int(trace.t.size),
        "x3_final": float(trace.x3[-1]),
        "step": float(trace.step),
        "plots": plot_files,
        "plot_error": plot_error,
    }


def _sweep_values(spec: str) -> tuple[str, list[float]]:
    if "=" not in spec:
        raise ValueError(f"sweep spec {spec!r} must look like key=v1,v2,...")
    key, _, rest = spec.partition("=")
    key = key.strip().lower()
    if key not in SWEEP_KEYS:
        raise ValueError(f"sweep key {key!r} not one of {SWEEP_KEYS}")
    values = [float(v) for v in rest.split(",") if v.strip()]
    if not values:
        raise ValueError(f"sweep spec {spec!r} has no values")
    return key, values


def _sweep_variant(sc: Scenario, key: str, value: float) -> Scenario:
    if key == "kp":
        return replace(sc, gains=PiGains(K_P=value, K_I=sc.gains.K_I), step=None)
    if key == "ki":
        return replace(sc, gains=PiGains(K_P=sc.gains.K_P, K_I=value), step=None)
    if sc.mode != ADAPTIVE:
        raise ValueError("sweep key 'k' applies to adaptive scenarios only")
    return replace(sc, est_gains=EstimatorGains(k1=value, k2=value))


def _cmd_simulate(args) -> int:
    try:
        if args.preset:
            sc = preset(args.preset)
        else:
            sc = scenario_io.load(args.scenario)
        sc = _apply_overrides(sc, args)
    except FileNotFoundError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    except ValueError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)

    outdir = _default_outdir(args.out)
    try:
        if args.sweep:
            key, values = _sweep_values(args.sweep)
            jobs = []
            for v in values:
                variant = _sweep_variant(sc, key, v)
                vdir = outdir / f"sweep_{key}_{v:g}"
                jobs.append((scenario_io.dumps(variant), str(vdir), args.plot))
            workers = min(len(jobs), os.cpu_count() or 1)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_one, *zip(*jobs)))
            for (_, vdir, _), res in zip(jobs, results):
                print(f"{vdir}: x3_final = {res['x3_final']:.4f} V ({res['samples']} samples)")
            return EXIT_OK
        res = _run_one(scenario_io.dumps(sc), str(outdir), args.plot)
    except InfeasibleSetpointError as exc:
        return _fail("InfeasibleSetpointError", str(exc), EXIT_INFEASIBLE)
    except SimulationAbort as exc:
        return _fail("SimulationAbort", str(exc), EXIT_NUMERIC, time=exc.time)
    except (CurveRangeError, SolverConvergenceError, FloatingPointError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    print(f"{res['outdir']}: trace.csv with {res['samples']} samples, "
          f"x3_final = {res['x3_final']:.4f} V, step = {res['step']:g} s")
    if res["plot_error"]:
        print(f"warning: plotting failed ({res['plot_error']})", file=sys.stderr)
    elif res["plots"]:
        print(f"plots: {', '.join(res['plots'])}")
    return EXIT_OK


def _cmd_equilibrium(args) -> int:
    params = nominal_params()
    if args.rl is not None:
        params = params.with_load(args.rl)
    if args.rp is not None:
        params = replace(params, theta1=args.rp)
    try:
        eq = solve_equilibrium(args.x3, params.theta, params.pol, args.ki)
    except InfeasibleSetpointError as exc:
        return _fail("InfeasibleSetpointError", str(exc), EXIT_INFEASIBLE)
    except (SolverConvergenceError, CurveRangeError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    print(f"x*   = ({eq.x1_star:.4f} V, {eq.x2_star:.4f} A, {eq.x3_star:.4f} V)")
    print(f"u*   = {eq.u_star:.6f}  (duty ratio D* = {1.0 - eq.u_star:.6f})")
    print(f"xc*  = {eq.xc_star:.4f}  (K_I = {args.ki:g})")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        samples = read_polarization_csv(args.csv)
        fitted = fit_polarization(samples)
    except FileNotFoundError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    except ValueError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_CONFIG)
    resid = np.array([s.v_fc - vfc(s.i_fc, fitted) for s in samples])
    rms = math.sqrt(float(resid @ resid) / len(samples))
    for key in ("c1", "c2", "c3", "c4", "c5"):
        print(f"{key} = {getattr(fitted, key):.6g}")
    print(f"rms residual = {rms:.6g} V over {len(samples)} samples")
    return EXIT_OK


def _cmd_presets(_args) -> int:
    for name in preset_names():
        print(f"{name}: {PRESET_NOTES[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fcboost",
        description="Fuel-cell boost-converter voltage regulation: simulation and analysis",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write trace.csv")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="preset name (see the presets subcommand)")
    src.add_argument("--scenario", help="path to a scenario file")
    sim.add_argument("--out", help="output directory (default ./out or $FCBOOST_OUT)")
    sim.add_argument("--plot", action="store_true", help="render SVG plots")
    sim.add_argument("--kp", type=float, help="override proportional gain")
    sim.add_argument("--ki", type=float, help="override integral gain")
    sim.add_argument("--k1", type=float, help="override estimator gain k1")
    sim.add_argument("--k2", type=float, help="override estimator gain k2")
    sim.add_argument("--step", type=float, help="override integration step [s]")
    sim.add_argument("--duration", type=float, help="override duration [s]")
    sim.add_argument("--decimation", type=int, help="record every Nth step")
    sim.add_argument("--setpoint", help="setpoint schedule, e.g. '0:40, 0.25:50'")
    sim.add_argument("--load", help="load schedule [ohm], e.g. '0.2:3.9168'")
    sim.add_argument("--sweep", help="fan out runs over key=v1,v2,...  (keys: kp, ki, k)")
    sim.set_defaults(func=_cmd_simulate)

    eq = sub.add_parser("equilibrium", help="solve the steady state for a setpoint")
    eq.add_argument("--x3", type=float, required=True, help="desired output voltage [V]")
    eq.add_argument("--rl", type=float, help="load resistance [ohm] (default 4.608)")
    eq.add_argument("--rp", type=float, help="parasitic resistance [ohm] (default 0.1)")
    eq.add_argument("--ki", type=float, default=0.001, help="integral gain for xc*")
    eq.set_defaults(func=_cmd_equilibrium)

    fit = sub.add_parser("fit", help="fit curve constants from a samples CSV")
    fit.add_argument("csv", help="CSV file with header i_fc_A,v_fc_V")
    fit.set_defaults(func=_cmd_fit)

    pre = sub.add_parser("presets", help="list available scenario presets")
    pre.set_defaults(func=_cmd_presets)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
