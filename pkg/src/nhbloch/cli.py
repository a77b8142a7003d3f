"""Command-line front end: simulate, fit, compare and thermal subcommands.

Frequencies are taken in Hz on the command line and converted by 2*pi
internally; decay rates are plain 1/s; angles are given in units of pi
(``--phi 1.5`` means 3*pi/2). Trajectory tables use the CSV contract

    t,mx,my,mz[,purity]

with LF line endings, '.' decimals and seconds for time; the purity column
appears on output only. JSON results carry ``schema_version`` "1". File
writes are whole-file atomic. Exit codes: 0 success, 1 usage or parse
failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .analytic import (
    CoherentField,
    DecayModel,
    coherent_bloch,
    damped_bloch,
    gamma_coefficients,
)
from .core import bloch_to_density
from .dynamics import GammaOperator, Trajectory, integrate_bloch, integrate_density, max_deviation
from .fit import DegenerateJacobianError, MagnetizationSeries, fidelity_trace, fit_decay_model
from .nmr import NmrContext, partition_function, polarization_factor

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

_MODELS = ("analytic", "ode-bloch", "ode-density")

# Seed time for ODE runs with decay: the damping coefficients diverge at 0.
_SINGULAR_T0 = 1e-9


class UsageError(Exception):
    pass


class CsvFormatError(Exception):
    pass


def _float_repr(x: float) -> str:
    return repr(float(x))


def _write_text(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nhbloch-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _csv_text(times, mx, my, mz, purity=None) -> str:
    lines = ["t,mx,my,mz" + (",purity" if purity is not None else "")]
    for i in range(len(times)):
        row = [_float_repr(times[i]), _float_repr(mx[i]), _float_repr(my[i]), _float_repr(mz[i])]
        if purity is not None:
            row.append(_float_repr(purity[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _read_series(path: str) -> MagnetizationSeries:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise CsvFormatError(f"{path}:1: empty file, expected header 't,mx,my,mz'")
    header = lines[0].strip()
    if header not in ("t,mx,my,mz", "t,mx,my,mz,purity"):
        raise CsvFormatError(f"{path}:1: bad header {header!r}, expected 't,mx,my,mz[,purity]'")
    ncols = header.count(",") + 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != ncols:
            raise CsvFormatError(f"{path}:{lineno}: expected {ncols} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts[:4]])
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise CsvFormatError(f"{path}:2: no data rows")
    data = np.array(rows)
    try:
        return MagnetizationSeries(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None


def _add_field_args(sp: argparse.ArgumentParser):
    sp.add_argument("--rabi-hz", type=float, help="drive strength nu_1 in Hz (omega_1 = 2 pi nu_1)")
    sp.add_argument("--phi", type=float, default=1.5, help="drive phase in units of pi (default 1.5)")
    sp.add_argument("--detuning-hz", type=float, default=0.0, help="larmor minus drive frequency, Hz")
    sp.add_argument(
        "--field-hz",
        type=float,
        nargs=3,
        metavar=("WX", "WY", "WZ"),
        help="explicit field components in Hz (overrides --rabi-hz)",
    )


def _add_decay_args(sp: argparse.ArgumentParser):
    sp.add_argument("--delta", type=float, help="fast decay rate, 1/s")
    sp.add_argument("--mu", type=float, help="slow decay rate, 1/s")
    sp.add_argument("--nu", type=float, help="residual bloch radius (dimensionless)")
    sp.add_argument("--delta-mu-ratio", type=float, help="set delta = ratio * mu")


def _add_grid_args(sp: argparse.ArgumentParser):
    sp.add_argument("--t-max", type=float, help="last sample time, s")
    sp.add_argument("--samples", type=int, default=251, help="number of samples (default 251)")
    sp.add_argument(
        "--t-start",
        type=float,
        help="first sample time, s (default 0; ODE models with decay default to 1e-9)",
    )


def _field_from_args(args) -> CoherentField:
    two_pi = 2.0 * math.pi
    if args.field_hz is not None:
        return CoherentField(*(two_pi * w for w in args.field_hz))
    if args.rabi_hz is None:
        raise UsageError("need --rabi-hz or --field-hz")
    if args.rabi_hz <= 0.0:
        raise UsageError("--rabi-hz must be positive")
    omega1 = two_pi * args.rabi_hz
    phase = math.pi * args.phi + math.pi
    return CoherentField(
        omega1 * math.cos(phase), omega1 * math.sin(phase), -two_pi * args.detuning_hz
    )


def _decay_from_args(args) -> DecayModel | None:
    given = [v is not None for v in (args.delta, args.mu, args.nu, args.delta_mu_ratio)]
    if not any(given):
        return None
    if args.mu is None or args.nu is None:
        raise UsageError("decay needs --mu and --nu plus either --delta or --delta-mu-ratio")
    if (args.delta is None) == (args.delta_mu_ratio is None):
        raise UsageError("give exactly one of --delta or --delta-mu-ratio")
    delta = args.delta if args.delta is not None else args.delta_mu_ratio * args.mu
    try:
        return DecayModel(delta, args.mu, args.nu)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid_from_args(args, model: str, decay: DecayModel | None) -> np.ndarray:
    if args.t_max is None:
        raise UsageError("need --t-max")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    t_start = args.t_start
    if t_start is None:
        t_start = _SINGULAR_T0 if (decay is not None and model.startswith("ode")) else 0.0
    if args.t_max <= t_start:
        raise UsageError("--t-max must exceed the start time")
    if decay is not None and model.startswith("ode") and t_start <= 0.0:
        raise UsageError("ODE models with decay need --t-start > 0 (damping diverges at t = 0)")
    return np.linspace(t_start, args.t_max, args.samples)


def _simulate(model: str, field: CoherentField, decay: DecayModel | None, times) -> Trajectory:
    if model == "analytic":
        if decay is not None:
            states = [damped_bloch(field, decay, t) for t in times]
        else:
            states = [coherent_bloch(field, t) for t in times]
        return Trajectory(times, np.array([[s.x, s.y, s.z] for s in states]))
    if decay is not None:
        lam = lambda t: gamma_coefficients(field, decay, t)
        r0 = damped_bloch(field, decay, times[0])
    else:
        lam = lambda t: (0.0, 0.0, 0.0)
        r0 = coherent_bloch(field, times[0])
    if model == "ode-bloch":
        return integrate_bloch(field, lam, r0, times)
    if model == "ode-density":
        gam = lambda t: GammaOperator(0.0, *lam(t))
        return integrate_density(field, gam, bloch_to_density(r0), times)
    raise UsageError(f"unknown model {model!r}")


def cmd_simulate(args) -> int:
    field = _field_from_args(args)
    decay = _decay_from_args(args)
    times = _grid_from_args(args, args.model, decay)
    if args.noise is not None and args.seed is None:
        raise UsageError("--noise needs --seed for a reproducible record")
    traj = _simulate(args.model, field, decay, times)
    # Purity is reported for the clean model state; noise perturbs only the
    # magnetization columns.
    purity_col = 0.5 * (1.0 + np.minimum(np.sum(traj.bloch**2, axis=1), 1.0))
    data = traj.bloch.copy()
    if args.noise is not None:
        rng = np.random.default_rng(args.seed)
        data = data + rng.normal(0.0, args.noise, data.shape)
    if args.format == "csv":
        text = _csv_text(times, data[:, 0], data[:, 1], data[:, 2], purity_col)
    else:
        text = _json_text(
            {
                "schema_version": "1",
                "command": "simulate",
                "model": args.model,
                "seed": args.seed,
                "noise": args.noise,
                "t": list(map(float, times)),
                "mx": list(map(float, data[:, 0])),
                "my": list(map(float, data[:, 1])),
                "mz": list(map(float, data[:, 2])),
                "purity": list(map(float, purity_col)),
            }
        )
    _write_text(args.out, text)
    return EXIT_OK


def cmd_fit(args) -> int:
    series = _read_series(args.input)
    guess = None
    if args.guess is not None:
        delta, mu, nu, rabi_hz = args.guess
        guess = (delta, mu, nu, 2.0 * math.pi * rabi_hz)
    result = fit_decay_model(series, guess, delta_mu_ratio=args.fix_ratio)
    payload = {
        "schema_version": "1",
        "command": "fit",
        "delta": result.delta,
        "mu": result.mu,
        "nu": result.nu,
        "omega1": result.omega1,
        "rabi_hz": result.omega1 / (2.0 * math.pi),
        "stderr": {
            "delta": result.delta_err,
            "mu": result.mu_err,
            "nu": result.nu_err,
            "omega1": result.omega1_err,
        },
        "rms": result.rms,
        "my_rms": result.my_rms,
        "iterations": result.iterations,
        "converged": result.converged,
        "fixed_delta_mu_ratio": args.fix_ratio,
        "seed": args.seed,
    }
    _write_text(args.out, _json_text(payload))
    return EXIT_OK if result.converged else EXIT_NUMERICAL


def _resolve_source(source: str, args, other_times=None) -> Trajectory:
    if source in _MODELS:
        field = _field_from_args(args)
        decay = _decay_from_args(args)
        if other_times is not None:
            times = other_times
            if decay is not None and source.startswith("ode") and times[0] <= 0.0:
                raise ValueError("file grid starts at t = 0; ODE models with decay need t > 0")
        else:
            times = _grid_from_args(args, source, decay)
        return _simulate(source, field, decay, times)
    series = _read_series(source)
    return Trajectory(series.times, np.column_stack([series.mx, series.my, series.mz]))


def cmd_compare(args) -> int:
    a_is_model = args.a in _MODELS
    b_is_model = args.b in _MODELS
    if not a_is_model and not b_is_model:
        traj_a = _resolve_source(args.a, args)
        traj_b = _resolve_source(args.b, args)
        if not np.array_equal(traj_a.times, traj_b.times):
            raise ValueError("grid mismatch between the two input files")
    elif a_is_model and b_is_model:
        field = _field_from_args(args)
        decay = _decay_from_args(args)
        strictest = args.a if args.a.startswith("ode") else args.b
        times = _grid_from_args(args, strictest, decay)
        traj_a = _simulate(args.a, field, decay, times)
        traj_b = _simulate(args.b, field, decay, times)
    else:
        file_traj = _resolve_source(args.b if a_is_model else args.a, args)
        model_traj = _resolve_source(
            args.a if a_is_model else args.b, args, other_times=file_traj.times
        )
        traj_a, traj_b = (model_traj, file_traj) if a_is_model else (file_traj, model_traj)

    report = max_deviation(traj_a, traj_b)
    fid = fidelity_trace(traj_a, traj_b)
    i_min = int(np.argmin(fid))
    payload = {
        "schema_version": "1",
        "command": "compare",
        "a": args.a,
        "b": args.b,
        "max_abs": {"mx": report.max_abs[0], "my": report.max_abs[1], "mz": report.max_abs[2]},
        "time_of_max": {
            "mx": report.time_of_max[0],
            "my": report.time_of_max[1],
            "mz": report.time_of_max[2],
        },
        "overall": report.overall,
        "overall_time": report.overall_time,
        "min_fidelity": float(fid[i_min]),
        "min_fidelity_time": float(traj_a.times[i_min]),
    }
    if args.json:
        _write_text(args.out, _json_text(payload))
    else:
        lines = [
            f"max |d mx| = {report.max_abs[0]:.6e} at t = {report.time_of_max[0]:.6e} s",
            f"max |d my| = {report.max_abs[1]:.6e} at t = {report.time_of_max[1]:.6e} s",
            f"max |d mz| = {report.max_abs[2]:.6e} at t = {report.time_of_max[2]:.6e} s",
            f"overall max deviation = {report.overall:.6e} at t = {report.overall_time:.6e} s",
            f"min fidelity = {fid[i_min]:.9f} at t = {traj_a.times[i_min]:.6e} s",
        ]
        _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_thermal(args) -> int:
    if args.larmor_hz <= 0.0 or args.temperature <= 0.0:
        raise UsageError("larmor frequency and temperature must be positive")
    omega_larmor = 2.0 * math.pi * args.larmor_hz
    ctx = NmrContext(
        omega_larmor=omega_larmor,
        omega_rf=omega_larmor,
        omega1=1.0,  # thermal quantities do not involve the drive
        phi=1.5 * math.pi,
        temperature=args.temperature,
    )
    eps_exact = polarization_factor(ctx, "exact")
    payload = {
        "schema_version": "1",
        "command": "thermal",
        "larmor_hz": args.larmor_hz,
        "temperature_k": args.temperature,
        "epsilon_exact": eps_exact,
        "epsilon_high_t": polarization_factor(ctx, "high_t"),
        "partition_function": partition_function(ctx),
        "eigenvalues": [0.5 * (1.0 + eps_exact), 0.5 * (1.0 - eps_exact)],
    }
    _write_text(args.out, _json_text(payload))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nhbloch",
        description="Simulate, cross-check and fit damped two-level magnetization dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a trajectory table (t, mx, my, mz, purity)")
    sim.add_argument("--model", choices=_MODELS, default="analytic")
    _add_field_args(sim)
    _add_decay_args(sim)
    _add_grid_args(sim)
    sim.add_argument("--noise", type=float, help="additive Gaussian sigma on the output columns")
    sim.add_argument("--seed", type=int, help="seed for the noise generator")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--out", help="output path (default stdout)")
    sim.set_defaults(func=cmd_simulate)

    fit_p = sub.add_parser("fit", help="estimate (delta, mu, nu, omega1) from a CSV record")
    fit_p.add_argument("input", help="CSV file with header t,mx,my,mz")
    fit_p.add_argument("--fix-ratio", type=float, help="pin delta = ratio * mu during the fit")
    fit_p.add_argument(
        "--guess",
        type=float,
        nargs=4,
        metavar=("DELTA", "MU", "NU", "RABI_HZ"),
        help="starting point (rates in 1/s, drive in Hz)",
    )
    fit_p.add_argument("--seed", type=int, help="provenance seed echoed into the result")
    fit_p.add_argument("--out", help="output path (default stdout)")
    fit_p.set_defaults(func=cmd_fit)

    cmp_p = sub.add_parser("compare", help="deviation and fidelity between two trajectories")
    cmp_p.add_argument("--a", required=True, help="model name (analytic, ode-bloch, ode-density) or CSV path")
    cmp_p.add_argument("--b", required=True, help="model name or CSV path")
    _add_field_args(cmp_p)
    _add_decay_args(cmp_p)
    _add_grid_args(cmp_p)
    cmp_p.add_argument("--json", action="store_true", help="machine-readable output")
    cmp_p.add_argument("--out", help="output path (default stdout)")
    cmp_p.set_defaults(func=cmd_compare)

    th = sub.add_parser("thermal", help="polarization factor and thermal-state quantities")
    th.add_argument("--larmor-hz", type=float, required=True)
    th.add_argument("--temperature", type=float, default=297.15, help="kelvin (default 297.15)")
    th.add_argument("--out", help="output path (default stdout)")
    th.set_defaults(func=cmd_thermal)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateJacobianError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
