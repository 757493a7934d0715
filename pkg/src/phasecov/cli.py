"""Command-line front end.

    phasecov --config run.toml trajectory
    phasecov --config run.toml classify
    phasecov --config run.toml regions
    phasecov --config run.toml verify
    phasecov --config run.toml cp-check --strict

Exit codes: 0 success, 1 usage or config error, 2 model evaluation error
(pole, quadrature, step size, expression domain), 3 physicality failure,
4 verify cross-check mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import conditions as cond
from . import config as cfgmod
from . import evolution as ev
from . import harness
from .expr import ExprError
from .quadrature import QuadratureError
from .rates import Phenomenological, PoleError, sample_rates

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MODEL = 2
EXIT_PHYSICAL = 3
EXIT_MISMATCH = 4


class Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# CSV ----------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return format(float(v) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def write_csv(path: Path, header, columns):
    """Columns of equal length, fixed 17-digit formatting, '\\n' line endings."""
    n = len(columns[0])
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in columns) + "\n")


# Shared plumbing ------------------------------------------------------------

def _require_model(cfg):
    if cfg.model is None:
        raise Failure(EXIT_CONFIG, "config key 'model': missing section")
    return cfg.model


def _setup(cfg):
    m = _require_model(cfg)
    grid = ev.make_grid(cfg.t_max, cfg.steps)
    fine = ev.sample_half_grid(m, grid)
    fit = cond.fit_class(fine.gamma1[::2], fine.gamma2[::2])
    cls = cfg.class_override or fit.cls
    probes = harness.Probes.for_class(cls, cfg.coherence_alpha0, cfg.diagonal_p1)
    return m, grid, fine, fit, cls, probes


def _intervals_text(iv):
    if iv is None:
        return "n/a"
    if not iv:
        return "none"
    return " ".join(f"[{a:.10g}, {b:.10g}]" for a, b in iv)


def _numeric_intervals(t, mask):
    return [(float(t[i]), float(t[j])) for i, j in cond.true_runs(mask)]


# Subcommands -----------------------------------------------------------------

def cmd_trajectory(cfg, out: Path, strict: bool):
    m, grid, fine, fit, cls, probes = _setup(cfg)
    ks = ev.integrate_kernels(m, grid, fine=fine)
    if cfg.scale_G != 1.0:
        ks = replace(ks, G=ks.G * cfg.scale_G)
    choi = ev.choi_min_eigs(ks)
    if np.min(choi) < -cfg.cp_tol:
        t_bad = float(grid[int(np.argmin(choi))])
        msg = f"map is not completely positive (min Choi eigenvalue {np.min(choi):.3e} at t={t_bad:.6g})"
        if strict:
            raise Failure(EXIT_PHYSICAL, msg)
        print(f"warning: {msg}", file=sys.stderr)
    suite = harness.indicator_suite(m, grid, cls, probes, cfg.eps_sign, kernels=ks, fine=fine)
    traj = suite.coherent
    r = traj.rates
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "trajectory.csv",
              ["t", "p1", "re_alpha", "im_alpha", "gamma1", "gamma2", "gamma3", "omega",
               "Gamma", "GammaTilde", "G", "Omega", "choi_min_eig"],
              [grid, traj.p1, traj.alpha.real, traj.alpha.imag, r.gamma1, r.gamma2, r.gamma3,
               r.omega, ks.Gamma, ks.GammaTilde, ks.G, ks.Omega, choi])

    if cfg.layout == "wide":
        header, cols = ["t"], [grid]
        for name, s in suite.series.items():
            header += [name, f"{name}_d_dt", f"{name}_detected"]
            cols += [s.values, s.d_dt, s.detected]
        write_csv(out / "indicators.csv", header, cols)
    else:
        for name, s in suite.series.items():
            write_csv(out / f"indicator_{name}.csv", ["t", s.indicator, "d_dt", "detected"],
                      [grid, s.values, s.d_dt, s.detected])

    report = cond.detection_report(m, grid, cls, cfg.eps_pred)
    print(f"class: {cond.describe(cls)}")
    print(f"{'condition':<11} {'indicator':<18} {'analytic intervals':<40} numeric detections")
    for pid in cond.PREDICATE_IDS:
        s = suite.by_predicate.get(pid)
        iv = report.intervals[pid]
        numeric = _intervals_text(_numeric_intervals(grid, s.detected)) if s is not None else "n/a"
        name = s.indicator if s is not None else "-"
        print(f"{pid:<11} {name:<18} {_intervals_text(iv):<40} {numeric}")
    print(f"wrote {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_classify(cfg, out: Path, strict: bool):
    m = _require_model(cfg)
    grid = ev.make_grid(cfg.t_max, cfg.steps)
    r = sample_rates(m, grid)
    fit = cond.fit_class(r.gamma1, r.gamma2)
    print(f"class: {cond.describe(fit.cls)}")
    if fit.kappa is not None:
        print(f"fitted kappa: {fit.kappa:.12g} (max residual {fit.residual:.3e})")
    else:
        print(f"no single kappa fits gamma2 = kappa gamma1 (max residual {fit.residual:.3e})")
    if isinstance(m, Phenomenological) and isinstance(fit.cls, cond.Commutative):
        N = m.params.N
        print(f"expected kappa = N/(N+1) = {N / (N + 1.0):.12g}")
    cls = cfg.class_override or fit.cls
    if cfg.class_override is not None:
        print(f"class override: {cond.describe(cls)}")
    print("applicable indicators: " + ", ".join(cond.applicable(cls)))
    return EXIT_OK


def cmd_regions(cfg, out: Path, strict: bool, threads: int):
    sw = cfg.sweep
    res = cond.region_sweep(sw.gamma_prime_range, sw.gamma3_range, sw.resolution,
                            threads=threads, eps_pred=cfg.eps_pred, kappa=sw.kappa)
    out.mkdir(parents=True, exist_ok=True)
    names = list(res.columns)
    write_csv(out / "regions.csv", ["gamma_prime", "gamma3"] + names,
              [res.gamma_prime, res.gamma3] + [res.columns[n] for n in names])
    print(f"wrote {out / 'regions.csv'} ({len(res.gamma_prime)} rows)")
    if sw.overlay and cfg.model is not None:
        grid = ev.make_grid(cfg.t_max, cfg.steps)
        r = sample_rates(cfg.model, grid)
        gp = r.gamma1 + r.gamma2
        cols = cond.region_columns(gp, r.gamma3, cfg.eps_pred, sw.kappa)
        names = ["cond_trace1", "cond_trace2", "cond_bloch", "cond_l1"]
        write_csv(out / "overlay.csv", ["t", "gamma3", "gamma_prime"] + names,
                  [grid, r.gamma3, gp] + [cols[n] for n in names])
        neg = _numeric_intervals(grid, gp < 0.0)
        print(f"wrote {out / 'overlay.csv'}; gamma' < 0 on: {_intervals_text(neg)}")
    return EXIT_OK


def cmd_verify(cfg, out: Path, strict: bool):
    m, grid, fine, fit, cls, probes = _setup(cfg)
    results = harness.run_checks(m, grid, cls, probes, cfg.eps_sign, cfg.eps_pred, cfg.cp_tol,
                                 g_scale=cfg.scale_G, strict_phase=cfg.strict_phase)
    print(f"class: {cond.describe(cls)}")
    for i, res in enumerate(results, 1):
        status = "SKIP" if res.skipped else ("PASS" if res.passed else "FAIL")
        print(f"({i}) {res.name:<26} {status}  {res.detail}")
    failed = [r for r in results if not r.passed and not r.skipped]
    if any(r.physical for r in failed):
        return EXIT_PHYSICAL
    if failed:
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_cp_check(cfg, out: Path, strict: bool):
    m = _require_model(cfg)
    grid = ev.make_grid(cfg.t_max, cfg.steps)
    ks = ev.integrate_kernels(m, grid)
    if cfg.scale_G != 1.0:
        ks = replace(ks, G=ks.G * cfg.scale_G)
    mins = ev.choi_min_eigs(ks)
    ok = mins >= -cfg.cp_tol
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "cp_check.csv", ["t", "choi_min_eig", "pass"], [grid, mins, ok])
    print(f"{'t':>12} {'choi_min_eig':>24} pass")
    stride = max(1, len(grid) // 20)
    for i in list(range(0, len(grid), stride)) + ([len(grid) - 1] if (len(grid) - 1) % stride else []):
        print(f"{grid[i]:12.6g} {mins[i]:24.17g} {'yes' if ok[i] else 'NO'}")
    n_bad = int(np.sum(~ok))
    print(f"{n_bad} of {len(grid)} grid points fail (tol {cfg.cp_tol:g}); "
          f"min eigenvalue {np.min(mins):.3e}; full table in {out / 'cp_check.csv'}")
    if n_bad and strict:
        return EXIT_PHYSICAL
    return EXIT_OK


# Entry point ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides outputs.directory)")
    common.add_argument("--strict", action="store_true",
                        help="treat CP violations as errors (exit 3)")
    common.add_argument("--threads", type=int, help="worker threads for the regions sweep")

    parser = argparse.ArgumentParser(
        prog="phasecov", parents=[common],
        description="Phase-covariant qubit dynamics: trajectories, detection conditions and cross-checks.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, text in (("trajectory", "evolve the probes and write trajectory and indicator CSVs"),
                       ("classify", "report the dynamics class and applicable indicators"),
                       ("regions", "condition regions over the (gamma', gamma3) plane"),
                       ("verify", "run the four analytic/numeric cross-checks"),
                       ("cp-check", "complete-positivity table along the grid")):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    threads = getattr(args, "threads", None) or os.cpu_count() or 1
    if threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        path = getattr(args, "config", None)
        cfg = cfgmod.load(path) if path else cfgmod.RunConfig()
        out = Path(getattr(args, "out", None) or cfg.directory)
        strict = getattr(args, "strict", False)
        if args.command == "regions":
            return cmd_regions(cfg, out, strict, threads)
        handler = {"trajectory": cmd_trajectory, "classify": cmd_classify,
                   "verify": cmd_verify, "cp-check": cmd_cp_check}[args.command]
        return handler(cfg, out, strict)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (PoleError, QuadratureError, ev.StepSizeError, ExprError) as exc:
        print(f"error: model evaluation failed: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ev.NonPhysicalMapError, ev.IntegrationAbort) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICAL


if __name__ == "__main__":
    sys.exit(main())
