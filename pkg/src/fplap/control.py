"""Outer optimization of the kernel coefficient under box and TV constraints.

The reduced objective (tracking misfit plus total variation of the
coefficient) is driven by proximal projected descent: a finite-difference
gradient of the smooth tracking term, an exact 1D total-variation
proximal step, and a componentwise projection onto the admissible box.
Derivatives over the handful of control degrees of freedom are cheaper
and more robust than an adjoint here, at the price of one inner solve
per degree of freedom and outer iteration.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .forms import ControlField, PairAssembly, StateField
from .regularizer import RegParams
from .state import SolveOptions, solve_state, solve_state_regularized


@dataclass(frozen=True)
class OptimizerOptions:
    step0: float = 1.0
    fd_step: float = 1e-6
    tol: float = 1e-8
    max_outer: int = 300
    step_floor: float = 1e-12


@dataclass
class ControlProblem:
    """Data of one coefficient control problem.

    ``rp`` selects the regularized inner equation; ``rp=None`` runs the
    reference problem with the unregularized equation.
    """

    asm: PairAssembly
    f: np.ndarray
    xi: np.ndarray
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    alpha: float
    rp: RegParams | None = None
    options: OptimizerOptions = field(default_factory=OptimizerOptions)
    solve_opts: SolveOptions = field(default_factory=SolveOptions)
    seed: int = 0

    def __post_init__(self):
        k = self.asm.dgrid.size
        self.f = np.asarray(self.f, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        self.bounds_lo = np.broadcast_to(
            np.asarray(self.bounds_lo, dtype=float), (k,)
        ).copy()
        self.bounds_hi = np.broadcast_to(
            np.asarray(self.bounds_hi, dtype=float), (k,)
        ).copy()
        if self.f.size != self.asm.grid.m or self.xi.size != self.asm.grid.m:
            raise ValueError("force and target must live on the interior nodes")
        ControlField(self.bounds_lo, self.bounds_lo, self.bounds_hi, self.alpha)

    def control(self, values) -> ControlField:
        return ControlField(values, self.bounds_lo, self.bounds_hi, self.alpha)

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.bounds_lo + self.bounds_hi)

    def solve_inner(self, values, u0=None):
        kappa = self.control(values)
        if self.rp is None:
            return solve_state(self.asm, self.f, kappa, self.solve_opts, u0=u0)
        return solve_state_regularized(
            self.asm, self.f, kappa, self.rp, self.solve_opts, u0=u0
        )


@dataclass
class OptimizeReport:
    kappa_star: ControlField
    u_star: StateField
    objective_value: float
    objective_history: list
    tv_value: float
    tracking_value: float
    inner_solves: int
    outer_iterations: int
    trace: list = field(default_factory=list)  # (iter, objective, tracking, tv, step)


def tv_seminorm(values) -> float:
    """Sum of absolute jumps between consecutive offsets (1D discrete TV)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.sum(np.abs(np.diff(values))))


def _taut_string(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Shortest path through the tube [lo, hi] with pinned endpoints.

    Greedy anchor walk: scan forward tightening the feasible slope cone;
    when it closes, the string bends on the binding bound and the walk
    restarts from the bend.  Quadratic worst case, which is fine at the
    control sizes used here.
    """
    n = lo.size
    s = np.empty(n)
    anchor, aval = 0, lo[0]
    s[0] = aval
    while anchor < n - 1:
        smin, smax = -np.inf, np.inf
        jmin = jmax = anchor + 1
        bend_idx, bend_slope = None, None
        j = anchor + 1
        while True:
            gap = j - anchor
            slo = (lo[j] - aval) / gap
            shi = (hi[j] - aval) / gap
            if slo > smin:
                smin, jmin = slo, j
            if shi < smax:
                smax, jmax = shi, j
            if smin > smax:
                # cone closed: bend on the bound recorded earlier
                if jmin == j:
                    bend_idx, bend_slope = jmax, smax
                else:
                    bend_idx, bend_slope = jmin, smin
                break
            if j == n - 1:
                send = (lo[n - 1] - aval) / gap
                if send > smax:
                    bend_idx, bend_slope = jmax, smax
                elif send < smin:
                    bend_idx, bend_slope = jmin, smin
                else:
                    bend_idx, bend_slope = n - 1, send
                break
            j += 1
        for i in range(anchor + 1, bend_idx + 1):
            s[i] = aval + bend_slope * (i - anchor)
        anchor, aval = bend_idx, s[bend_idx]
    return s


def tv_prox(values, lam: float) -> np.ndarray:
    """Exact minimizer of 0.5 ||z - values||^2 + lam * TV(z).

    Computed by the taut-string construction: the solution is the slope
    sequence of the shortest path through the lam-tube around the
    cumulative sums, pinned at both ends.
    """
    values = np.asarray(values, dtype=float)
    if lam < 0:
        raise ValueError("lam must be positive")
    if values.size <= 1 or lam == 0.0:
        return values.copy()
    r = np.concatenate(([0.0], np.cumsum(values)))
    lo = r - lam
    hi = r + lam
    lo[0] = hi[0] = r[0]
    lo[-1] = hi[-1] = r[-1]
    return np.diff(_taut_string(lo, hi))


def project_admissible(values, lo, hi) -> np.ndarray:
    """Componentwise clamp onto the admissible box."""
    return np.clip(np.asarray(values, dtype=float), lo, hi)


def objective(kappa_values, u, xi, h: float) -> float:
    """Tracking misfit plus total variation of the coefficient."""
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if u.size != xi.size:
        raise ValueError("state and target dimensions differ")
    return 0.5 * h * float(np.sum((u - xi) ** 2)) + tv_seminorm(kappa_values)


def _tracking(problem: ControlProblem, u) -> float:
    diff = np.asarray(u) - problem.xi
    return 0.5 * problem.asm.grid.h * float(np.sum(diff * diff))


def reduced_tracking_gradient_fd(
    problem: ControlProblem, kappa_values, u_warm=None, base_tracking=None
):
    """Forward finite differences of the tracking term over the coefficient
    degrees of freedom, one-sided at active bounds, zero at pinned ones.

    Returns (gradient, inner_solve_count).
    """
    kappa_values = np.asarray(kappa_values, dtype=float)
    fd = problem.options.fd_step
    lo, hi = problem.bounds_lo, problem.bounds_hi
    if base_tracking is None:
        base = problem.solve_inner(kappa_values, u0=u_warm)
        base_tracking = _tracking(problem, base.u.interior)
        u_warm = base.u.interior
        solves = 1
    else:
        solves = 0
    grad = np.zeros(kappa_values.size)
    for k in range(kappa_values.size):
        if hi[k] - lo[k] == 0.0:
            continue
        if kappa_values[k] + fd <= hi[k]:
            pert = kappa_values.copy()
            pert[k] += fd
            rep = problem.solve_inner(pert, u0=u_warm)
            grad[k] = (_tracking(problem, rep.u.interior) - base_tracking) / fd
        else:
            pert = kappa_values.copy()
            pert[k] -= fd
            rep = problem.solve_inner(pert, u0=u_warm)
            grad[k] = (base_tracking - _tracking(problem, rep.u.interior)) / fd
        solves += 1
    return grad, solves


def _prox_descent(problem: ControlProblem, kappa0=None) -> OptimizeReport:
    opts = problem.options
    h = problem.asm.grid.h
    kappa = (
        problem.midpoint()
        if kappa0 is None
        else project_admissible(kappa0, problem.bounds_lo, problem.bounds_hi)
    )
    rep = problem.solve_inner(kappa)
    u = rep.u.interior
    inner = 1
    tracking = _tracking(problem, u)
    tv = tv_seminorm(kappa)
    obj = tracking + tv
    history = [obj]
    trace = [(0, obj, tracking, tv, 0.0)]
    step = opts.step0
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        grad, used = reduced_tracking_gradient_fd(
            problem, kappa, u_warm=u, base_tracking=tracking
        )
        inner += used
        accepted = False
        while step >= opts.step_floor:
            trial = project_admissible(
                tv_prox(kappa - step * grad, step),
                problem.bounds_lo,
                problem.bounds_hi,
            )
            if np.array_equal(trial, kappa):
                break
            rep = problem.solve_inner(trial, u0=u)
            inner += 1
            tracking_trial = _tracking(problem, rep.u.interior)
            tv_trial = tv_seminorm(trial)
            obj_trial = tracking_trial + tv_trial
            if obj_trial <= obj:
                kappa, u = trial, rep.u.interior
                drop = obj - obj_trial
                obj, tracking, tv = obj_trial, tracking_trial, tv_trial
                history.append(obj)
                trace.append((outer, obj, tracking, tv, step))
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        step = min(2.0 * step, opts.step0)
        if drop <= opts.tol * max(1.0, abs(obj)):
            break
    return OptimizeReport(
        kappa_star=problem.control(kappa),
        u_star=StateField(u),
        objective_value=obj,
        objective_history=history,
        tv_value=tv,
        tracking_value=tracking,
        inner_solves=inner,
        outer_iterations=outer,
        trace=trace,
    )


def solve_rocp(problem: ControlProblem, kappa0=None) -> OptimizeReport:
    """Minimize the tracking + TV objective subject to the regularized
    state equation.  Local optimality only: the reduced problem is not
    convex in the coefficient."""
    if problem.rp is None:
        raise ValueError("regularized problem requires regularization parameters")
    return _prox_descent(problem, kappa0)


def solve_ocp_reference(problem: ControlProblem, kappa0=None) -> OptimizeReport:
    """Same descent loop with the unregularized inner equation; serves as
    the limit reference for the regularization sweeps."""
    if problem.rp is not None:
        problem = dataclasses.replace(problem, rp=None)
    return _prox_descent(problem, kappa0)
