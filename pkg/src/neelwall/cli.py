"""Command-line entry points.

Every subcommand writes its output files into ``--out`` and finishes by
writing ``manifest.json`` (the commit marker): the resolved configuration,
grid, seeds, version, wall-clock, output list, and a periodization
diagnostic (cos theta halfway between the two leftmost grid points, which
measures how far the wall is from saturating at the domain edge).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .dynamics import (BlowUpError, Perturbation, SimConfig, decay_fit,
                       integrate, orbital_experiment)
from .energy import gradient_selftest
from .grid import Field, Grid
from .linops import build_Bc, build_block, build_L
from .profiles import Profile, SolverError, mobility, solve_static, solve_traveling
from .regions import RegionParams, run_all_checks
from .reports import store_profile, write_report
from .spectra import eig_report, relative_bound_fit, resolvent_sweep

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3

SUBCOMMANDS = ("solve-static", "solve-moving", "mobility", "spectrum",
               "resolvent-sweep", "relative-bound", "simulate", "orbital",
               "appendix-check")

DEFAULTS = {
    "L": 40.0,
    "n": 2048,
    "nu": 1.0,
    "H": "0.001",
    "delta": None,
    "dt": 0.01,
    "t_end": None,
    "seed": 0,
    "out": ".",
    "mode": "nonlocal",
}

_FLOAT_KEYS = ("L", "nu", "delta", "dt", "t_end")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


class ConfigError(ValueError):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="neelwall",
                     description="Static and moving wall profiles of the "
                                 "reduced thin-film model: solvers, spectra, "
                                 "resolvent sweeps, and simulations.")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--L", type=float, default=None,
                        help="domain half-length")
    parser.add_argument("--n", type=int, default=None,
                        help="grid size (power of two)")
    parser.add_argument("--nu", type=float, default=None, help="damping")
    parser.add_argument("--H", type=str, default=None,
                        help="applied field; comma list for mobility scans")
    parser.add_argument("--delta", type=float, default=None,
                        help="contour half-width (default from the gap)")
    parser.add_argument("--dt", type=float, default=None, help="time step")
    parser.add_argument("--t-end", type=float, default=None,
                        help="simulation end time")
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out", type=str, default=None,
                        help="output directory")
    parser.add_argument("--config", type=str, default=None,
                        help="flat key = value config file; flags override")
    parser.add_argument("--mode", type=str, default=None,
                        choices=("nonlocal", "local"),
                        help="stray-field model (local replaces T by 1)")
    return parser


def _read_config_file(path) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = line.partition("=")
                if not sep:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key = key.strip().replace("-", "_")
                val = val.strip()
                if key not in DEFAULTS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    try:
        if key == "n" or key == "seed":
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < command-line flags."""
    config = dict(DEFAULTS)
    if args.config:
        config.update(_read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key)
        if flag is not None:
            config[key] = flag
    for key in config:
        config[key] = _coerce(key, config[key])
    if config["mode"] not in ("nonlocal", "local"):
        raise ConfigError(f"mode must be nonlocal or local, got {config['mode']!r}")
    return config


def _field_list(config) -> list[float]:
    try:
        return [float(tok) for tok in str(config["H"]).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad field list {config['H']!r}") from exc


def _single_field(config) -> float:
    fields = _field_list(config)
    if len(fields) != 1:
        raise ConfigError(f"this command takes a single field value, got {fields}")
    return fields[0]


def _periodization(profile: Profile) -> float:
    """cos theta at -L + dx/2 (linear interpolation between the first two
    samples): how imperfectly the phase saturates at the edge."""
    ct = np.cos(profile.reconstruct())
    return float(0.5 * (ct[0] + ct[1]))


def _write_manifest(out_dir, command, config, grid, seed, outputs,
                    periodization, t0, scalars=None):
    manifest = {
        "command": command,
        "config": {k: config[k] for k in sorted(config)},
        "grid": {"L": grid.L, "n": grid.n, "dx": grid.dx},
        "seeds": {"master": seed},
        "version": __version__,
        "wall_clock_seconds": time.monotonic() - t0,
        "outputs": sorted(outputs),
        "periodization_cos_theta_edge": periodization,
    }
    if scalars:
        manifest["scalars"] = scalars
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _default_delta(nu: float, gap: float) -> float:
    return 0.4 * min(gap, nu / 2.0)


def _static_tol(grid: Grid) -> float:
    # the reachable residual is limited by the seam layer of the periodized
    # wall and scales with the grid spacing; 1e-8 is attainable at the
    # default grid (dx ~ 0.04) but not on coarse exploratory grids
    return max(1e-8, 1e-6 * grid.dx**2)


def _static(grid: Grid, config) -> Profile:
    return solve_static(grid, tol=_static_tol(grid), mode=config["mode"])


def _moving(grid: Grid, config, H: float) -> Profile:
    if config["mode"] != "nonlocal":
        raise ConfigError("moving-wall commands require --mode nonlocal")
    return solve_traveling(grid, H, config["nu"])


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (profile-for-diagnostic, outputs, scalars)


def _cmd_solve_static(grid, config, out, seed):
    prof = _static(grid, config)
    path = os.path.join(out, "static_profile.neelw")
    store_profile(prof, path)
    return prof, [path], {"residual": prof.residual,
                          "energy_mode": config["mode"]}


def _cmd_solve_moving(grid, config, out, seed):
    prof = _moving(grid, config, _single_field(config))
    path = os.path.join(out, "moving_profile.neelw")
    store_profile(prof, path)
    return prof, [path], {"c": prof.c, "residual": prof.residual}


def _cmd_mobility(grid, config, out, seed):
    fields = _field_list(config)
    fit = mobility(grid, config["nu"], fields)
    rows = [{"H": H, "c": c,
             "beta_measured": fit.beta_measured,
             "beta_predicted": fit.beta_predicted,
             "M": fit.M, "fit_error": fit.fit_error}
            for H, c in sorted(fit.speeds.items())]
    path = os.path.join(out, "mobility.csv")
    write_report(rows, "csv", path)
    static = solve_static(grid, tol=_static_tol(grid))
    return static, [path], {"beta_measured": fit.beta_measured,
                            "beta_predicted": fit.beta_predicted}


def _cmd_spectrum(grid, config, out, seed):
    H = _single_field(config)
    if H == 0.0:
        prof = _static(grid, config)
        prof = Profile(prof.theta, 0.0, 0.0, config["nu"], prof.residual,
                       prof.meta)
        report = eig_report(build_L(prof))
    else:
        prof = _moving(grid, config, H)
        report = eig_report(build_block(prof, with_c=True))
    path = os.path.join(out, "spectrum.csv")
    write_report(report, "csv", path)
    scalars = {"lambda0_re": report.lambda0.real,
               "lambda0_im": report.lambda0.imag,
               "gap": report.gap}
    if report.Lambda0_num is not None:
        scalars["Lambda0"] = report.Lambda0_num
    return prof, [path], scalars


def _op_and_delta(grid, config):
    """Static profile, block operator A, and a delta inside the gap."""
    prof = _static(grid, config)
    prof = Profile(prof.theta, 0.0, 0.0, config["nu"], prof.residual, prof.meta)
    L_report = eig_report(build_L(prof))
    delta = config["delta"]
    if delta is None:
        delta = _default_delta(config["nu"], L_report.gap)
    return prof, L_report, delta


def _cmd_resolvent_sweep(grid, config, out, seed):
    prof, L_report, delta = _op_and_delta(grid, config)
    A = build_block(prof, with_c=False)
    sweep = resolvent_sweep(A, delta)
    csv_path = os.path.join(out, "resolvent_sweep.csv")
    write_report(sweep, "csv", csv_path)
    summary = {"delta": delta, "w": sweep.w, "M1": sweep.M1,
               "flagged": sweep.flagged,
               "envelope_margin": sweep.envelope_margin,
               **{f"sup_{k}": v for k, v in sweep.sup_by_region.items()}}
    json_path = os.path.join(out, "resolvent_summary.jsonl")
    write_report(summary, "json-lines", json_path)
    return prof, [csv_path, json_path], {"sup_G": sweep.sup_G, "w": sweep.w}


def _cmd_relative_bound(grid, config, out, seed):
    H = _single_field(config)
    static = _static(grid, config)
    static = Profile(static.theta, 0.0, 0.0, config["nu"], static.residual,
                     static.meta)
    if H == 0.0:
        moving = static
    else:
        moving = _moving(grid, config, H)
    A = build_block(static, with_c=False)
    Bc = build_Bc(moving, static)
    point = relative_bound_fit(A, Bc, seed=seed)
    path = os.path.join(out, "relative_bound.jsonl")
    write_report({"c": point.c, "H": point.H, "a": point.a, "b": point.b},
                 "json-lines", path)
    return static, [path], {"a": point.a, "b": point.b, "c": point.c}


def _sim_config(config, seed) -> SimConfig:
    nu = config["nu"]
    t_end = config["t_end"]
    if t_end is None:
        t_end = max(20.0, 12.0 / nu)
    return SimConfig(dt=config["dt"], t_end=t_end, nu=nu,
                     H=_single_field(config),
                     perturbation=Perturbation(seed=seed))


def _cmd_simulate(grid, config, out, seed):
    sim = _sim_config(config, seed)
    if sim.H == 0.0:
        ref = _static(grid, config)
        ref = Profile(ref.theta, 0.0, 0.0, sim.nu, ref.residual, ref.meta)
    else:
        ref = _moving(grid, config, sim.H)
    trace = integrate(grid, sim, ref)
    path = os.path.join(out, "trace.csv")
    write_report(trace, "csv", path)
    fit = decay_fit(trace)
    return ref, [path], {"decay_rate": fit.omega, "decay_r2": fit.r2,
                         "final_defect": float(trace.defect[-1])}


def _cmd_orbital(grid, config, out, seed):
    H = _single_field(config)
    nu = config["nu"]
    if H == 0.0:
        ref = _static(grid, config)
        ref = Profile(ref.theta, 0.0, 0.0, nu, ref.residual, ref.meta)
    else:
        ref = _moving(grid, config, H)
    verdict = orbital_experiment(grid, H, Perturbation(seed=seed), nu, ref,
                                 dt=config["dt"], t_end=config["t_end"])
    trace_path = os.path.join(out, "orbital_trace.csv")
    write_report(verdict.trace, "csv", trace_path)
    fit = verdict.fit
    summary = {"stable": verdict.stable,
               "decay_rate": fit.omega if fit else float("nan"),
               "decay_r2": fit.r2 if fit else float("nan"),
               "wall_speed": verdict.wall_speed,
               "c_reference": verdict.c_reference,
               "a2_ratio": verdict.a2_ratio,
               "a2_bound": verdict.a2_bound,
               "a3_exponent": verdict.a3_exponent}
    verdict_path = os.path.join(out, "orbital_verdict.jsonl")
    write_report(summary, "json-lines", verdict_path)
    return ref, [trace_path, verdict_path], {
        "stable": bool(verdict.stable), "wall_speed": verdict.wall_speed}


def _cmd_appendix_check(grid, config, out, seed):
    prof, L_report, delta = _op_and_delta(grid, config)
    nu = config["nu"]
    Lambda0 = L_report.Lambda0_num
    beta = 0.9
    delta = min(delta, 0.49 * beta * nu)
    params = RegionParams(nu=nu, delta=delta, Lambda0=Lambda0, beta=beta)
    checks = run_all_checks(params, seed=seed)
    rows = [{"name": c.name, "n_samples": c.n_samples, "seed": c.seed,
             "passed": c.passed, "observed": c.observed, "bound": c.bound}
            for c in checks]
    path = os.path.join(out, "appendix_report.jsonl")
    write_report(rows, "json-lines", path)
    return prof, [path], {"all_passed": all(c.passed for c in checks),
                          "Lambda0": Lambda0, "delta": delta}


_COMMANDS = {
    "solve-static": _cmd_solve_static,
    "solve-moving": _cmd_solve_moving,
    "mobility": _cmd_mobility,
    "spectrum": _cmd_spectrum,
    "resolvent-sweep": _cmd_resolvent_sweep,
    "relative-bound": _cmd_relative_bound,
    "simulate": _cmd_simulate,
    "orbital": _cmd_orbital,
    "appendix-check": _cmd_appendix_check,
}


def _startup_selftest():
    """Cheap gradient-vs-finite-difference check on a small grid; aborts the
    run if the energy gradient is inconsistent (nothing downstream can be
    trusted then)."""
    g = Grid(20.0, 64)
    rng = np.random.default_rng(12345)
    w = 0.05 * np.real(np.fft.ifft(
        np.where(np.abs(g.k) <= 2.0, np.fft.fft(rng.standard_normal(g.n)), 0)))
    theta = Field(g, w, "wall")
    err = gradient_selftest(theta, n_dirs=2)
    if err > 1e-6:
        raise RuntimeError(
            f"startup self-test failed: gradient inconsistency {err:.3e}")


def run(argv=None) -> int:
    t0 = time.monotonic()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        grid = Grid(config["L"], config["n"])
        out = config["out"]
        os.makedirs(out, exist_ok=True)
        seed = config["seed"]
        _startup_selftest()
        body = _COMMANDS[args.command]
        profile, outputs, scalars = body(grid, config, out, seed)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, BlowUpError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write_manifest(out, args.command, config, grid, seed, outputs,
                    _periodization(profile), t0, scalars)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
