"""Built-in structural property battery for ``check-invariants``.

Each check re-derives the quantity it verifies with a naive scalar
implementation (double loops, finite differences, closed forms) so the
vectorized production paths are exercised against independent arithmetic.
"""

from __future__ import annotations

import numpy as np

from .control import tv_prox, tv_seminorm
from .forms import ControlField, PairAssembly, StateField
from .grid import FracParams, build_difference_grid, build_grid
from .regularizer import DELTA_BLEND, RegParams, f_n, f_n_prime
from .state import SolveOptions, minty_margin, residual, solve_state, solve_state_regularized


def _naive_energy_form(asm, u, v, kappa):
    total = 0.0
    uu, vv = asm.embed(u), asm.embed(v)
    fp = asm.fp
    n = uu.size
    for i in range(n):
        for j in range(n):
            if not asm.pair_mask[i, j]:
                continue
            du = uu[i] - uu[j]
            dv = vv[i] - vv[j]
            d = asm.dist[i, j]
            total += (
                0.5
                * fp.c_norm
                * kappa.values[asm.kidx[i, j]]
                * abs(du) ** (fp.p - 2.0)
                * du
                * dv
                * asm.grid.h**2
                / d ** (1.0 + fp.s * fp.p)
            )
    for i in range(asm.grid.m):
        total += asm.grid.h * u.interior[i] * v.interior[i]
    if fp.variant == "full":
        kf = kappa.values[-1]
        r = asm.dgrid.r_trunc
        coeff = fp.c_norm * kf * 2.0 * r ** (-fp.s * fp.p) / (fp.s * fp.p)
        for i in range(asm.grid.m):
            ui = u.interior[i]
            total += coeff * abs(ui) ** (fp.p - 2.0) * ui * v.interior[i] * asm.grid.h
    return total


def _check_grid(seed):
    grid = build_grid(0.0, 1.0, 3)
    dg = build_difference_grid(grid)
    ok = abs(grid.h - 0.25) < 1e-15 and dg.size == 4
    for i in range(grid.nodes.size):
        for j in range(grid.nodes.size):
            if i == j:
                continue
            k = abs(i - j)
            ok = ok and dg.offsets[k - 1] == k * grid.h
    return "grid-offsets", bool(ok), "pair distances map bit-exactly to stored offsets"


def _check_regularizer(seed):
    rng = np.random.default_rng(seed)
    ok = True
    for n in (1, 2, 4, 8):
        n2 = n * n
        tau = np.sort(rng.uniform(0.0, n2 + 3.0, 2000))
        vals = f_n(tau, n)
        ok &= np.all(vals[tau <= n2] == tau[tau <= n2])
        ok &= np.all(vals[tau > n2 + 1.0] == n2 + 1.0)
        blend = (tau >= n2) & (tau <= n2 + 1.0)
        ok &= np.all(vals[blend] >= tau[blend] - 1e-12)
        ok &= np.all(vals[blend] <= tau[blend] + DELTA_BLEND + 1e-12)
        ok &= np.all(np.diff(vals) >= -1e-12)
        for t0 in (n2 - 1e-9, n2 + 1e-9, n2 + 1.0 - 1e-9, n2 + 1.0 + 1e-9):
            fd = (f_n(t0 + 1e-6, n) - f_n(t0 - 1e-6, n)) / 2e-6
            ok &= abs(fd - f_n_prime(t0, n)) <= 1e-6
    return "regularizer-cutoff", bool(ok), "branches, sandwich, monotone, C1 junctions"


def _small_instance(seed, p=3.0, variant="regional"):
    rng = np.random.default_rng(seed)
    grid = build_grid(0.0, 1.0, 4)
    r_trunc = 2.0 if variant == "full" else None
    dg = build_difference_grid(grid, variant, r_trunc)
    fp = FracParams(s=0.75, p=p, c_norm=1.0, variant=variant)
    asm = PairAssembly(grid, dg, fp)
    kappa = ControlField(
        rng.uniform(0.6, 1.4, dg.size), 0.5, 1.5, 0.5
    )
    u = StateField(rng.standard_normal(grid.m))
    v = StateField(rng.standard_normal(grid.m))
    f = rng.standard_normal(grid.m)
    return asm, kappa, u, v, f


def _check_forms(seed):
    worst = 0.0
    for k, (p, variant) in enumerate(
        [(2.0, "regional"), (3.0, "regional"), (3.0, "full")]
    ):
        asm, kappa, u, v, _ = _small_instance(seed + k, p, variant)
        a = asm.energy_form(u, v, kappa)
        b = _naive_energy_form(asm, u, v, kappa)
        worst = max(worst, abs(a - b) / (1.0 + abs(b)))
    return "forms-oracle", worst <= 1e-12, f"naive double-loop gap {worst:.2e}"


def _check_gradient(seed):
    asm, kappa, u, _, f = _small_instance(seed, 3.0)
    rp = RegParams(1e-2, 2)
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(5):
        direction = rng.standard_normal(asm.grid.m)
        for use_rp in (None, rp):
            if use_rp is None:
                pot = lambda w: asm.energy_functional(StateField(w), f, kappa)
                frm = asm.energy_form(u, StateField(direction), kappa)
            else:
                pot = lambda w: asm.regularized_potential(StateField(w), f, kappa, use_rp)
                frm = asm.regularized_form(u, StateField(direction), kappa, use_rp)
            fd = (pot(u.interior + 1e-6 * direction) - pot(u.interior - 1e-6 * direction)) / 2e-6
            expect = frm - asm.load(f, direction)
            worst = max(worst, abs(fd - expect) / (1.0 + abs(expect)))
    return "gradient-consistency", worst <= 1e-6, f"FD directional gap {worst:.2e}"


def _check_solver(seed):
    asm, kappa, _, _, f = _small_instance(seed, 2.0)
    opts = SolveOptions()
    rep = solve_state(asm, f, kappa, opts)
    # independent linear oracle: for p = 2 the Hessian is the system matrix
    mat = asm.hessian(StateField.zeros(asm.grid.m), kappa, None)
    exact = np.linalg.solve(mat, asm.grid.h * f)
    gap = float(np.max(np.abs(rep.u.interior - exact)))
    margin = minty_margin(asm, rep.u, f, kappa, probes=100, seed=seed)
    norm_f = float(np.sqrt(asm.grid.h * np.dot(f, f)))
    ok = gap <= 1e-10 and margin >= -1e-8 * (1.0 + norm_f)
    return "state-solver", bool(ok), f"linear gap {gap:.2e}, minty margin {margin:.2e}"


def _check_monotone(seed):
    asm, kappa, _, _, _ = _small_instance(seed, 3.0)
    rng = np.random.default_rng(seed + 2)
    rp = RegParams(1e-3, 4)
    ok = True
    for _ in range(50):
        a = rng.standard_normal(asm.grid.m)
        b = rng.standard_normal(asm.grid.m)
        for use_rp in (None, rp):
            ra = residual(asm, StateField(a), np.zeros(asm.grid.m), kappa, use_rp)
            rb = residual(asm, StateField(b), np.zeros(asm.grid.m), kappa, use_rp)
            ok &= float(np.dot(ra - rb, a - b)) > 0.0
    return "monotonicity", bool(ok), "strict monotone residual on random pairs"


def _check_p2_collapse(seed):
    asm, kappa, _, _, f = _small_instance(seed, 2.0)
    opts = SolveOptions()
    sols = []
    for eps in (1e-1, 1e-3, 1e-6):
        for n in (1, 8, 64):
            rep = solve_state_regularized(asm, f, kappa, RegParams(eps, n), opts)
            sols.append(rep.u.interior)
    gap = max(float(np.max(np.abs(s - sols[0]))) for s in sols)
    return "p2-collapse", gap <= 1e-10, f"solution spread over (eps, n) grid {gap:.2e}"


def _check_tv(seed):
    rng = np.random.default_rng(seed + 3)
    ok = True
    worst = 0.0
    for _ in range(50):
        size = int(rng.integers(1, 9))
        y = rng.uniform(0.0, 1.0, size)
        lam = float(rng.uniform(0.01, 0.5))
        z = tv_prox(y, lam)
        ok &= abs(tv_seminorm(y) - sum(abs(y[i + 1] - y[i]) for i in range(size - 1))) < 1e-15
        # KKT certificate: the dual variables are the prefix sums of the
        # prox displacement, and optimality pins them to [-1, 1] with
        # equality-to-sign at every nonzero jump
        vdual = np.cumsum(z - y) / lam
        if size > 1:
            worst = max(worst, float(np.max(np.abs(vdual[:-1]))) - 1.0)
            jumps = np.diff(z)
            for i in range(size - 1):
                if abs(jumps[i]) > 1e-12:
                    ok &= abs(vdual[i] - np.sign(jumps[i])) <= 1e-10
            ok &= abs(vdual[-1]) <= 1e-10
    ok &= worst <= 1e-10
    return "tv-prox-kkt", bool(ok), f"dual feasibility excess {max(worst, 0.0):.2e}"


def run_all_checks(seed: int = 12345):
    """Run the full battery; returns (name, ok, detail) triples."""
    checks = [
        _check_grid,
        _check_regularizer,
        _check_forms,
        _check_gradient,
        _check_solver,
        _check_monotone,
        _check_p2_collapse,
        _check_tv,
    ]
    return [fn(seed) for fn in checks]
