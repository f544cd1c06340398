"""Command-line entry point: configuration, orchestration, persistence.

Subcommands
-----------
solve-state      solve one state equation for a fixed coefficient
solve-rocp       optimize the coefficient under the regularized equation
solve-ocp        optimize the coefficient under the unregularized equation
sweep            drive a regularization schedule and certify convergence
check-invariants run the built-in structural property battery

Every run writes a JSON manifest (config echo, versions, seed, results)
next to its CSV artifacts; re-running with the same configuration and
seed reproduces every output byte for byte, and a manifest itself can be
passed back as ``--config`` to replay the run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, parse_config, sample_on_nodes
from .control import (
    ControlProblem,
    OptimizerOptions,
    solve_ocp_reference,
    solve_rocp,
)
from .errors import ConfigError, NonConvergence
from .forms import ControlField, PairAssembly
from .grid import FracParams, build_difference_grid, build_grid
from .invariants import run_all_checks
from .regularizer import DELTA_BLEND, RegParams
from .serialize import write_csv, write_json, write_plot_data
from .state import SolveOptions, solve_state, solve_state_regularized
from .sweep import Schedule, default_schedule, emit_convergence_report, run_sweep


class Runtime:
    """Objects materialized from a validated configuration."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.grid = build_grid(cfg.a, cfg.b, cfg.m)
        self.dgrid = build_difference_grid(self.grid, cfg.variant, cfg.r_trunc)
        self.fp = FracParams(s=cfg.s, p=cfg.p, c_norm=cfg.c_norm, variant=cfg.variant)
        self.asm = PairAssembly(self.grid, self.dgrid, self.fp)
        x_int = self.grid.nodes[1:-1]
        self.f = sample_on_nodes(cfg.f_spec, x_int, "f")
        self.xi = sample_on_nodes(cfg.xi_spec, x_int, "xi")
        k = self.dgrid.size
        self.bounds_lo = np.broadcast_to(
            np.atleast_1d(np.asarray(cfg.xi1, dtype=float)), (k,)
        ).copy()
        self.bounds_hi = np.broadcast_to(
            np.atleast_1d(np.asarray(cfg.xi2, dtype=float)), (k,)
        ).copy()
        if cfg.kappa_spec is None:
            kappa0 = 0.5 * (self.bounds_lo + self.bounds_hi)
        else:
            kappa0 = np.clip(
                sample_on_nodes(cfg.kappa_spec, self.dgrid.offsets, "kappa"),
                self.bounds_lo,
                self.bounds_hi,
            )
        self.kappa0 = kappa0
        self.rp = (
            RegParams(epsilon=cfg.epsilon, n=cfg.n_reg)
            if cfg.epsilon is not None and cfg.n_reg is not None
            else None
        )
        self.solve_opts = SolveOptions(
            tol_residual=cfg.tol_residual,
            max_iter=cfg.max_iter,
            seed=cfg.seed,
            diagnostics=True,
        )
        self.problem = ControlProblem(
            asm=self.asm,
            f=self.f,
            xi=self.xi,
            bounds_lo=self.bounds_lo,
            bounds_hi=self.bounds_hi,
            alpha=cfg.alpha,
            rp=self.rp,
            options=OptimizerOptions(
                step0=cfg.outer_step0,
                fd_step=cfg.outer_fd_step,
                tol=cfg.outer_tol,
                max_outer=cfg.outer_max_iter,
            ),
            solve_opts=dataclasses.replace(self.solve_opts, diagnostics=False),
            seed=cfg.seed,
        )

    def control(self, values) -> ControlField:
        return ControlField(values, self.bounds_lo, self.bounds_hi, self.cfg.alpha)

    def schedule(self) -> Schedule:
        cfg = self.cfg
        if cfg.schedule_eps is not None:
            points = tuple(zip(cfg.schedule_eps, cfg.schedule_n))
            t = cfg.t_exponent
            if t is None:
                t = self.fp.s if self.fp.p == 2.0 else 0.5 * (0.5 + self.fp.s)
            return Schedule(points=points, t=t)
        return default_schedule(self.fp, t=cfg.t_exponent)


def _manifest(cfg: RunConfig, results: dict) -> dict:
    return {
        "config": cfg.to_dict(),
        "versions": {
            "fplap": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": cfg.seed,
        "blend_overshoot": DELTA_BLEND,
        "results": results,
    }


def _flags_dict(report) -> dict:
    out = {
        "iterations": report.iterations,
        "final_residual": report.final_residual,
        "energy_value": report.energy_value,
        "quasi_norm_value": report.quasi_norm_value,
        "minty_margin": report.minty_margin,
    }
    if report.apriori is not None:
        out["apriori"] = dataclasses.asdict(report.apriori)
    return out


def _cmd_solve_state(rt: Runtime, outdir: Path) -> dict:
    kappa = rt.control(rt.kappa0)
    if rt.rp is not None:
        report = solve_state_regularized(rt.asm, rt.f, kappa, rt.rp, rt.solve_opts)
    else:
        report = solve_state(rt.asm, rt.f, kappa, rt.solve_opts)
    results = _flags_dict(report)
    results["u"] = report.u.interior.tolist()
    if "csv" in rt.cfg.formats:
        write_csv(
            outdir / "iterates.csv",
            ["iteration", "residual", "energy"],
            report.history,
        )
        write_csv(
            outdir / "state.csv",
            ["x", "u"],
            list(zip(rt.grid.nodes[1:-1], report.u.interior)),
        )
    return results


def _optimize_results(rt: Runtime, report, outdir: Path, stem: str) -> dict:
    results = {
        "objective": report.objective_value,
        "tracking": report.tracking_value,
        "tv": report.tv_value,
        "outer_iterations": report.outer_iterations,
        "inner_solves": report.inner_solves,
        "kappa": report.kappa_star.values.tolist(),
        "u": report.u_star.interior.tolist(),
    }
    if "csv" in rt.cfg.formats:
        write_csv(
            outdir / f"{stem}_history.csv",
            ["outer_iter", "objective", "tracking", "tv", "step"],
            report.trace,
        )
        write_csv(
            outdir / f"{stem}_kappa.csv",
            ["offset", "kappa"],
            list(zip(rt.dgrid.offsets, report.kappa_star.values)),
        )
        write_csv(
            outdir / f"{stem}_state.csv",
            ["x", "u"],
            list(zip(rt.grid.nodes[1:-1], report.u_star.interior)),
        )
    return results


def _cmd_solve_rocp(rt: Runtime, outdir: Path) -> dict:
    if rt.rp is None:
        raise ConfigError(["solve-rocp requires [regularization] epsilon and n"])
    report = solve_rocp(rt.problem, kappa0=rt.kappa0)
    return _optimize_results(rt, report, outdir, "rocp")


def _cmd_solve_ocp(rt: Runtime, outdir: Path) -> dict:
    report = solve_ocp_reference(rt.problem, kappa0=rt.kappa0)
    return _optimize_results(rt, report, outdir, "ocp")


def _cmd_sweep(rt: Runtime, outdir: Path) -> dict:
    schedule = rt.schedule()
    result = run_sweep(rt.problem, schedule)
    paths = emit_convergence_report(result, outdir)
    return {
        "points": len(result.records),
        "verdicts": result.verdicts,
        "files": [Path(p).name for p in paths],
    }


def _cmd_check_invariants(rt: Runtime, outdir: Path) -> dict:
    checks = run_all_checks(seed=rt.cfg.seed)
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    results = {
        "checks": [
            {"name": name, "ok": ok, "detail": detail} for name, ok, detail in checks
        ],
        "all_ok": all(ok for _, ok, _ in checks),
    }
    if not results["all_ok"]:
        raise NonConvergence(0, float("nan"), "invariant checks failed")
    return results


_COMMANDS = {
    "solve-state": _cmd_solve_state,
    "solve-rocp": _cmd_solve_rocp,
    "solve-ocp": _cmd_solve_ocp,
    "sweep": _cmd_sweep,
    "check-invariants": _cmd_check_invariants,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fplap",
        description="Coefficient optimal control for fractional p-Laplace equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="TOML config or JSON manifest")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--eps", type=float, default=None)
        cmd.add_argument("--n-reg", type=int, default=None)
        cmd.add_argument("--p", type=float, default=None)
        cmd.add_argument("--s", type=float, default=None)
        cmd.add_argument("--m", type=int, default=None)
        cmd.add_argument("--variant", choices=["regional", "full"], default=None)
    return parser


def run(command: str, cfg: RunConfig) -> dict:
    """Execute one subcommand; returns the manifest dictionary."""
    rt = Runtime(cfg)
    outdir = Path(cfg.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = _COMMANDS[command](rt, outdir)
    manifest = _manifest(cfg, results)
    if "json" in cfg.formats:
        write_json(outdir / f"{command.replace('-', '_')}_manifest.json", manifest)
    return manifest


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "out_dir": args.out,
        "seed": args.seed,
        "epsilon": args.eps,
        "n_reg": args.n_reg,
        "p": args.p,
        "s": args.s,
        "m": args.m,
        "variant": args.variant,
    }
    try:
        cfg = parse_config(args.config, overrides)
        run(args.command, cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "violations": exc.violations}))
        return 2
    except NonConvergence as exc:
        print(
            json.dumps(
                {
                    "error": "nonconvergence",
                    "iterations": exc.iterations,
                    "residual": None
                    if np.isnan(exc.residual)
                    else exc.residual,
                    "message": str(exc),
                }
            )
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
