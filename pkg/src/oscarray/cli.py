"""Command-line front end.

Subcommands mirror the analysis pipeline: extract the per-oscillator
sample tables, solve one constant-phase-shift point, sweep the phase
shift, trace stability, sweep the injection phase, and validate the
linearized models against the exact system.  All numeric output is
deterministic CSV; exit codes are 0 (success), 1 (configuration error)
and 2 (numeric failure).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import ConfigError, OscArrayError
from .extraction import write_sample_table
from .solver import (InjectionSource, SweepPoint, SweepResult,
                     solve_constant_phase, sweep_injection, sweep_phase,
                     write_sweep_csv)
from .stability import stable_range, write_stability_csv
from .validation import compare_curves, exact_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="oscarray",
                description="Coupled-oscillator array analysis with "
                            "piecewise-linear admittance models.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", required=True,
                        help="TOML run-configuration file")
        sp.add_argument("-o", "--output-dir",
                        help="override the configured output directory")
        sp.add_argument("--jobs", type=int, default=1,
                        help="workers for per-point stability classification")

    sp = sub.add_parser("extract",
                        help="sample each oscillator's free-running "
                             "characteristic to a CSV table")
    common(sp)

    sp = sub.add_parser("solve", help="solve one constant-phase-shift point")
    common(sp)
    sp.add_argument("--dphi", type=float, required=True,
                    help="constant phase shift in radians")
    sp.add_argument("--i-s-ma", type=float, default=0.0,
                    help="injection amplitude in mA (default free-running)")
    sp.add_argument("--theta-s", type=float, default=0.0,
                    help="injection phase in radians")

    sp = sub.add_parser("sweep", help="continuation sweep over delta-phi")
    common(sp)

    sp = sub.add_parser("stability",
                        help="pole trace and refined stable intervals "
                             "over the sweep range")
    common(sp)

    sp = sub.add_parser("inject-sweep",
                        help="synchronization range: sweep the injection "
                             "phase over [0, 2 pi]")
    common(sp)

    sp = sub.add_parser("validate",
                        help="compare PW and non-PW models against the "
                             "exact system; exit 2 beyond tolerance")
    common(sp)
    return p


def _outdir(cfg: RunConfig, args) -> Path:
    out = Path(args.output_dir) if args.output_dir else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_extract(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    models = cfg.pw_models()
    for i, model in enumerate(models):
        path = out / f"osc{i + 1}_table.csv"
        write_sample_table(model, path)
        rows = len(model.samples) if hasattr(model, "samples") else 1
        print(f"oscillator {i + 1}: {rows} samples -> {path}")
    return EXIT_OK


def _cmd_solve(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    spec = cfg.spec(cfg.pw_models())
    inj = InjectionSource(args.i_s_ma * 1e-3, args.theta_s)
    sol = solve_constant_phase(spec, inj, args.dphi,
                               tol=cfg.tol, max_iter=cfg.max_iterations)
    sweep = SweepResult(points=[SweepPoint(args.dphi, sol)])
    path = out / "solution.csv"
    write_sweep_csv(sweep, path, cfg.n)
    print(f"delta_phi = {args.dphi:.6g} rad: f_s = {sol.f_s / 1e9:.9g} GHz, "
          f"residual = {sol.residual_norm:.3e}")
    for i in range(cfg.n):
        print(f"  osc {i + 1}: V = {sol.v[i]:.6g} V, "
              f"eta = {sol.eta[i]:.6g} V, phi = {sol.phi[i]:.6g} rad")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    spec = cfg.spec(cfg.pw_models())
    sweep = sweep_phase(spec, None, cfg.dphi_values,
                        tol=cfg.tol, max_iter=cfg.max_iterations)
    path = out / "phase_sweep.csv"
    write_sweep_csv(sweep, path, cfg.n)
    print(f"{len(sweep.points)} converged points, {len(sweep.gaps)} gaps "
          f"-> {path}")
    if sweep.truncated:
        print(f"warning: {sweep.diagnostic}")
    return EXIT_OK


def _cmd_stability(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    spec = cfg.spec(cfg.pw_models())
    sweep = sweep_phase(spec, None, cfg.dphi_values,
                        tol=cfg.tol, max_iter=cfg.max_iterations)
    rng = stable_range(spec, None, sweep, tol=cfg.tol,
                       max_iter=cfg.max_iterations, jobs=args.jobs)
    trace_path = out / "stability_trace.csv"
    write_stability_csv(rng, trace_path, cfg.n)
    iv_path = out / "stable_intervals.csv"
    with open(iv_path, "w", newline="") as fh:
        fh.write("dphi_lo_rad,dphi_hi_rad\n")
        for lo, hi in rng.intervals:
            fh.write(f"{lo:.11e},{hi:.11e}\n")
    if rng.intervals:
        for lo, hi in rng.intervals:
            print(f"stable: delta_phi in ({lo:.6g}, {hi:.6g}) rad")
    else:
        print("no stable interval found in the sweep range")
    print(f"wrote {trace_path} and {iv_path}")
    return EXIT_OK


def _cmd_inject_sweep(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    spec = cfg.spec(cfg.pw_models())
    thetas = np.linspace(0.0, 2.0 * math.pi, cfg.inj_theta_points + 1)
    sweep = sweep_injection(spec, cfg.inj_dphi, cfg.inj_i_s, thetas,
                            tol=cfg.tol, max_iter=cfg.max_iterations)
    path = out / "injection_sweep.csv"
    write_sweep_csv(sweep, path, cfg.n, param_name="theta_s_rad")
    ws = sweep.omega_s
    if ws.size:
        print(f"synchronization range: {ws.min() / 2 / math.pi / 1e9:.9g} "
              f"to {ws.max() / 2 / math.pi / 1e9:.9g} GHz "
              f"({(ws.max() - ws.min()) / 2 / math.pi / 1e6:.4g} MHz wide)")
    print(f"{len(sweep.points)} converged points, {len(sweep.gaps)} gaps "
          f"-> {path}")
    return EXIT_OK


def _cmd_validate(cfg: RunConfig, args) -> int:
    out = _outdir(cfg, args)
    spec_pw = cfg.spec(cfg.pw_models())
    spec_np = cfg.spec(cfg.nonpw_models(cfg.val_nonpw_eta_c))
    spec_ex = cfg.spec(cfg.oracle_models())
    dphis = cfg.val_dphi_values
    sw_pw = sweep_phase(spec_pw, None, dphis, tol=cfg.tol,
                        max_iter=cfg.max_iterations)
    sw_np = sweep_phase(spec_np, None, dphis, tol=cfg.tol,
                        max_iter=cfg.max_iterations)
    sw_ex = exact_sweep(spec_ex, None, dphis, tol=cfg.tol,
                        max_iter=cfg.max_iterations)
    c_pw = compare_curves(sw_pw, sw_ex)
    c_np = compare_curves(sw_np, sw_ex)
    ratio = (c_np.max_abs_eta_error / c_pw.max_abs_eta_error
             if c_pw.max_abs_eta_error > 0 else math.inf)
    pw_ok = c_pw.max_abs_eta_error < cfg.val_eta_tol
    ratio_ok = ratio > cfg.val_min_ratio

    for label, sw in (("pw", sw_pw), ("nonpw", sw_np), ("exact", sw_ex)):
        write_sweep_csv(sw, out / f"validate_{label}_sweep.csv", cfg.n,
                        model_label=label)

    path = out / "validate_report.csv"
    with open(path, "w", newline="") as fh:
        fh.write("model,max_abs_eta_error_v,rms_eta_error_v,"
                 "max_rel_freq_error,points,threshold,passed\n")
        fh.write(f"pw,{c_pw.max_abs_eta_error:.11e},"
                 f"{c_pw.rms_eta_error:.11e},{c_pw.max_rel_freq_error:.11e},"
                 f"{c_pw.points},{cfg.val_eta_tol:.11e},{int(pw_ok)}\n")
        fh.write(f"nonpw,{c_np.max_abs_eta_error:.11e},"
                 f"{c_np.rms_eta_error:.11e},{c_np.max_rel_freq_error:.11e},"
                 f"{c_np.points},,\n")
        fh.write(f"ratio,{ratio:.11e},,,,{cfg.val_min_ratio:.11e},"
                 f"{int(ratio_ok)}\n")

    print(f"PW    max |eta - exact| = {c_pw.max_abs_eta_error:.3e} V "
          f"(tolerance {cfg.val_eta_tol:.1e} V): "
          f"{'pass' if pw_ok else 'FAIL'}")
    print(f"nonPW max |eta - exact| = {c_np.max_abs_eta_error:.3e} V")
    print(f"nonPW/PW error ratio = {ratio:.3g} "
          f"(minimum {cfg.val_min_ratio:.3g}): "
          f"{'pass' if ratio_ok else 'FAIL'}")
    print(f"wrote {path}")
    return EXIT_OK if (pw_ok and ratio_ok) else EXIT_NUMERIC


_COMMANDS = {
    "extract": _cmd_extract,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "stability": _cmd_stability,
    "inject-sweep": _cmd_inject_sweep,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"oscarray: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"oscarray: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OscArrayError as exc:
        print(f"oscarray: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
