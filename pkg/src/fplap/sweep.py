"""Regularization schedules and empirical convergence certification.

A schedule drives the regularization pair (eps_k, n_k) toward (0, inf)
while the outer control problem is re-solved with warm starts.  The
harness compares each point against a directly computed reference
solution of the unregularized problem and asserts the expected decay
trends: control distance in L1, state distance in a weaker fractional
seminorm, total-variation gap, pair-energy gap, objective gap, and the
vanishing of the saturated level sets.  Only trends and final gaps are
asserted; no convergence rates are claimed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .control import ControlProblem, solve_ocp_reference, solve_rocp, tv_seminorm
from .errors import NonConvergence
from .forms import StateField
from .regularizer import RegParams
from .serialize import short_hash, write_csv, write_json, write_plot_data

#: relative + absolute slack for "nonincreasing" trend comparisons
_TREND_RTOL = 1e-6
_TREND_ATOL = 1e-12


@dataclass(frozen=True)
class Schedule:
    """Strictly monotone regularization path plus the comparison exponent t."""

    points: tuple
    t: float

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("schedule must contain at least one point")
        eps = [p[0] for p in self.points]
        ns = [p[1] for p in self.points]
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("epsilon must be strictly decreasing")
        if any(n2 <= n1 for n1, n2 in zip(ns, ns[1:])):
            raise ValueError("n must be strictly increasing")
        if any(e <= 0 for e in eps) or any(n < 1 for n in ns):
            raise ValueError("schedule entries must have eps > 0 and n >= 1")


def default_schedule(fp, k_max: int = 6, t: float | None = None) -> Schedule:
    """Geometric default: eps_k = 4^-k, n_k = 2^k, k = 1..k_max."""
    points = tuple((4.0**-k, 2**k) for k in range(1, k_max + 1))
    if t is None:
        t = fp.s if fp.p == 2.0 else 0.5 * (0.5 + fp.s)
    return Schedule(points=points, t=float(t))


@dataclass
class SweepRecord:
    """Snapshot of one schedule point and its gaps to the reference."""

    eps: float
    n: int
    kappa: np.ndarray
    u: np.ndarray
    objective: float
    tracking: float
    tv: float
    quasi_p_energy: float
    gagliardo_p_energy: float
    kappa_l1_gap: float
    u_gap_t2: float
    tv_gap: float
    energy_gap: float
    obj_gap: float
    levelset_measure: float
    levelset_mu: float
    levelset_energy: float
    converged: bool


@dataclass
class SweepResult:
    schedule: Schedule
    records: list
    reference: dict
    verdicts: dict
    p: float = 0.0
    s: float = 0.0
    m: int = 0


def _nonincreasing(values) -> bool:
    return all(
        b <= a * (1.0 + _TREND_RTOL) + _TREND_ATOL for a, b in zip(values, values[1:])
    )


def _trend_verdict(values) -> dict:
    tail = values[len(values) // 2 :]
    return {
        "values": list(values),
        "tail": list(tail),
        "nonincreasing_tail": _nonincreasing(tail),
    }


def run_sweep(
    problem: ControlProblem, schedule: Schedule, obj_gap_tol: float = 1e-3
) -> SweepResult:
    """Solve the regularized control problem along the schedule and compare
    against the unregularized reference.

    For p = 2 every schedule point solves the identical problem, so the
    first point serves as the reference; for p > 2 the reference is a
    direct solve of the unregularized problem (its objective value is
    comparable even when minimizers are not unique).
    """
    fp = problem.asm.fp
    t = schedule.t
    if not 0.5 < t <= fp.s:
        raise ValueError("comparison exponent t must satisfy 1/2 < t <= s")
    if fp.p == 2.0 and t != fp.s:
        raise ValueError("for p = 2 the comparison exponent must equal s")
    asm = problem.asm
    h = asm.grid.h

    reference = None
    if fp.p > 2.0:
        ref_rep = solve_ocp_reference(problem)
        reference = {
            "kappa": ref_rep.kappa_star.values.copy(),
            "u": ref_rep.u_star.interior.copy(),
            "objective": ref_rep.objective_value,
            "tv": ref_rep.tv_value,
            "p_energy": asm.weighted_p_energy(ref_rep.u_star, ref_rep.kappa_star),
        }

    records = []
    warm_kappa = None
    warm_ok = None
    for eps, n in schedule.points:
        rp = RegParams(epsilon=eps, n=int(n))
        prob_k = dataclasses.replace(problem, rp=rp)
        try:
            rep = solve_rocp(prob_k, kappa0=warm_kappa)
        except NonConvergence:
            records.append(
                SweepRecord(
                    eps, int(n), np.array([]), np.array([]), np.nan, np.nan, np.nan,
                    np.nan, np.nan, np.nan, np.nan, np.nan, np.nan, np.nan,
                    np.nan, np.nan, np.nan, False,
                )
            )
            continue
        warm_kappa = rep.kappa_star.values
        warm_ok = rep
        kappa_field = rep.kappa_star
        u = rep.u_star
        if reference is None:
            # p = 2 degenerate path: the first successful point is the limit
            reference = {
                "kappa": kappa_field.values.copy(),
                "u": u.interior.copy(),
                "objective": rep.objective_value,
                "tv": rep.tv_value,
                "p_energy": asm.weighted_p_energy(u, kappa_field),
            }
        diff = StateField(u.interior - reference["u"])
        quasi_p = asm.quasi_norm(u, kappa_field, rp) ** fp.p
        ls = asm.level_set(u, int(n), saturated=True)
        records.append(
            SweepRecord(
                eps=eps,
                n=int(n),
                kappa=kappa_field.values.copy(),
                u=u.interior.copy(),
                objective=rep.objective_value,
                tracking=rep.tracking_value,
                tv=rep.tv_value,
                quasi_p_energy=quasi_p,
                gagliardo_p_energy=asm.gagliardo_seminorm(u) ** fp.p,
                kappa_l1_gap=h * float(np.sum(np.abs(kappa_field.values - reference["kappa"]))),
                u_gap_t2=asm.gagliardo_seminorm(diff, s=t, p=2.0),
                tv_gap=abs(rep.tv_value - reference["tv"]),
                energy_gap=abs(quasi_p - reference["p_energy"]),
                obj_gap=abs(rep.objective_value - reference["objective"]),
                levelset_measure=ls.measure_h,
                levelset_mu=ls.mu_h,
                levelset_energy=asm.level_set_energy(u, kappa_field, rp),
                converged=True,
            )
        )

    good = [r for r in records if r.converged]
    if len(good) < (len(records) + 1) // 2 or warm_ok is None:
        raise NonConvergence(
            len(records) - len(good),
            np.nan,
            "fewer than half of the schedule points converged",
        )

    verdicts = {
        "kappa_l1": _trend_verdict([r.kappa_l1_gap for r in good]),
        "state_t2": _trend_verdict([r.u_gap_t2 for r in good]),
        "tv": _trend_verdict([r.tv_gap for r in good]),
        "energy": _trend_verdict([r.energy_gap for r in good]),
        "objective": _trend_verdict([r.obj_gap for r in good]),
    }
    verdicts["objective"]["final_gap"] = good[-1].obj_gap
    verdicts["objective"]["final_gap_tol"] = obj_gap_tol
    verdicts["objective"]["final_ok"] = good[-1].obj_gap <= obj_gap_tol
    for key in verdicts:
        verdicts[key]["pass"] = verdicts[key]["nonincreasing_tail"]
    verdicts["objective"]["pass"] = (
        verdicts["objective"]["nonincreasing_tail"]
        and verdicts["objective"]["final_ok"]
    )
    return SweepResult(
        schedule=schedule,
        records=records,
        reference=reference,
        verdicts=verdicts,
        p=fp.p,
        s=fp.s,
        m=asm.grid.m,
    )


def check_level_set_vanishing(result: SweepResult, final_tol: float = 1e-6) -> dict:
    """Assert that the saturated level sets and the pair-energy portion they
    carry both vanish along the schedule."""
    good = [r for r in result.records if r.converged]
    measures = [r.levelset_measure for r in good]
    energies = [r.levelset_energy for r in good]
    verdict = {
        "measure": _trend_verdict(measures),
        "energy": _trend_verdict(energies),
        "final_measure": measures[-1],
        "final_energy": energies[-1],
        "final_tol": final_tol,
    }
    verdict["pass"] = (
        verdict["measure"]["nonincreasing_tail"]
        and verdict["energy"]["nonincreasing_tail"]
        and measures[-1] <= final_tol
        and energies[-1] <= final_tol
    )
    return verdict


def emit_convergence_report(result: SweepResult, outdir, prefix: str = "sweep") -> list:
    """Write the per-point CSV, the verdict JSON and plot-ready gap data.

    File names embed (p, s, m) and a short hash of the schedule so
    concurrent sweeps never collide.
    """
    if not result.records:
        raise ValueError("cannot report an empty sweep")
    records = result.records
    sched_obj = {"points": [list(p) for p in result.schedule.points], "t": result.schedule.t}
    digest = short_hash(sched_obj)
    tag = f"{prefix}_p{result.p:g}_s{result.s:g}_m{result.m}_{digest}"
    header = [
        "k", "eps", "n", "converged", "objective", "tracking", "tv",
        "quasi_p_energy", "gagliardo_p_energy", "kappa_l1_gap", "u_gap_t2",
        "tv_gap", "energy_gap", "obj_gap", "levelset_measure", "levelset_mu",
        "levelset_energy",
    ]
    rows = [
        [
            k, r.eps, r.n, r.converged, r.objective, r.tracking, r.tv,
            r.quasi_p_energy, r.gagliardo_p_energy, r.kappa_l1_gap, r.u_gap_t2,
            r.tv_gap, r.energy_gap, r.obj_gap, r.levelset_measure, r.levelset_mu,
            r.levelset_energy,
        ]
        for k, r in enumerate(records, start=1)
    ]
    paths = [write_csv(f"{outdir}/{tag}.csv", header, rows)]
    verdict_obj = {
        "schedule": sched_obj,
        "verdicts": result.verdicts,
        "levelset": check_level_set_vanishing(result),
        "reference_objective": result.reference["objective"],
    }
    paths.append(write_json(f"{outdir}/{tag}_verdicts.json", verdict_obj))
    good = [(k, r) for k, r in enumerate(records, start=1) if r.converged]
    paths.append(
        write_plot_data(
            f"{outdir}/{tag}_gaps.dat",
            ["k", "obj_gap", "kappa_l1_gap", "u_gap_t2", "energy_gap"],
            [[k, r.obj_gap, r.kappa_l1_gap, r.u_gap_t2, r.energy_gap] for k, r in good],
        )
    )
    return paths
