"""Independent reference implementations used to check the package.

Everything here is written against the *definitions* (scalar double
loops, dense linear algebra, brute-force minimization), never against
the vectorized production code paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq


def cutoff(tau, n):
    """Scalar cutoff: identity / cubic blend / constant."""
    n2 = n * n
    if tau <= n2:
        return tau
    if tau > n2 + 1.0:
        return n2 + 1.0
    t = tau - n2
    return n2 + (-t**3 + t**2 + t)


def node_set(grid, dgrid):
    """Node coordinates and index offsets used in the pair sums."""
    k_max = dgrid.offsets.size
    n_ext = k_max - 1 if dgrid.variant == "full" else 0
    idx = list(range(-n_ext, grid.m + 2 + n_ext))
    return idx, n_ext


def embed(grid, dgrid, u_int):
    idx, n_ext = node_set(grid, dgrid)
    full = [0.0] * len(idx)
    for i in range(grid.m):
        full[n_ext + 1 + i] = float(u_int[i])
    return idx, n_ext, full


def _pairs(grid, dgrid):
    idx, n_ext = node_set(grid, dgrid)
    k_max = dgrid.offsets.size
    for a in range(len(idx)):
        for b in range(len(idx)):
            k = abs(idx[a] - idx[b])
            if 1 <= k <= k_max:
                yield a, b, k


def tail_coeff(dgrid, exponent):
    if dgrid.variant != "full":
        return 0.0
    return 2.0 * dgrid.r_trunc ** (-exponent) / exponent


def energy_form(grid, dgrid, fp, u_int, v_int, kap):
    idx, n_ext, uu = embed(grid, dgrid, u_int)
    _, _, vv = embed(grid, dgrid, v_int)
    h, s, p, c = grid.h, fp.s, fp.p, fp.c_norm
    total = 0.0
    for a, b, k in _pairs(grid, dgrid):
        d = dgrid.offsets[k - 1]
        du = uu[a] - uu[b]
        dv = vv[a] - vv[b]
        total += 0.5 * c * kap[k - 1] * abs(du) ** (p - 2.0) * du * dv * h * h / d ** (1.0 + s * p)
    for i in range(grid.m):
        total += h * u_int[i] * v_int[i]
    coeff = c * kap[-1] * tail_coeff(dgrid, s * p)
    for i in range(grid.m):
        total += coeff * abs(u_int[i]) ** (p - 2.0) * u_int[i] * v_int[i] * h
    return total


def regularized_form(grid, dgrid, fp, u_int, v_int, kap, eps, n):
    idx, n_ext, uu = embed(grid, dgrid, u_int)
    _, _, vv = embed(grid, dgrid, v_int)
    h, s, p, c = grid.h, fp.s, fp.p, fp.c_norm
    total = 0.0
    for a, b, k in _pairs(grid, dgrid):
        d = dgrid.offsets[k - 1]
        du = uu[a] - uu[b]
        dv = vv[a] - vv[b]
        fac = (eps + cutoff(du * du / d ** (2.0 * s), n)) ** (0.5 * (p - 2.0))
        total += 0.5 * c * kap[k - 1] * fac * du * dv * h * h / d ** (1.0 + 2.0 * s)
    for i in range(grid.m):
        total += h * u_int[i] * v_int[i]
    coeff = c * kap[-1] * tail_coeff(dgrid, 2.0 * s)
    if coeff:
        r2s = dgrid.r_trunc ** (2.0 * s)
        for i in range(grid.m):
            ui = u_int[i]
            fac = (eps + cutoff(ui * ui / r2s, n)) ** (0.5 * (p - 2.0))
            total += coeff * fac * ui * v_int[i] * h
    return total


def quasi_norm_p(grid, dgrid, fp, u_int, kap, eps, n):
    _, _, uu = embed(grid, dgrid, u_int)
    h, s, p = grid.h, fp.s, fp.p
    total = 0.0
    for a, b, k in _pairs(grid, dgrid):
        d = dgrid.offsets[k - 1]
        du = uu[a] - uu[b]
        fac = (eps + cutoff(du * du / d ** (2.0 * s), n)) ** (0.5 * (p - 2.0))
        total += kap[k - 1] * fac * du * du * h * h / d ** (1.0 + 2.0 * s)
    return total


def gagliardo_p(grid, dgrid, fp, u_int, s=None, p=None):
    s = fp.s if s is None else s
    p = fp.p if p is None else p
    _, _, uu = embed(grid, dgrid, u_int)
    h = grid.h
    total = 0.0
    for a, b, k in _pairs(grid, dgrid):
        d = dgrid.offsets[k - 1]
        total += abs(uu[a] - uu[b]) ** p * h * h / d ** (1.0 + s * p)
    return total


def level_set_pairs(grid, dgrid, fp, u_int, threshold):
    """Ordered pairs over the base [a, b] nodes exceeding the quotient
    threshold, with both discrete measures."""
    idx, n_ext, uu = embed(grid, dgrid, u_int)
    h, s = grid.h, fp.s
    base = range(n_ext, n_ext + grid.m + 2)
    count, mu = 0, 0.0
    for a in base:
        for b in base:
            if a == b:
                continue
            d = dgrid.offsets[abs(idx[a] - idx[b]) - 1]
            if abs(uu[a] - uu[b]) / d**s > threshold:
                count += 1
                mu += h * h / d ** (2.0 * s - 1.0)
    return count, h * h * count, mu


def linear_state_matrix(grid, dgrid, fp, kap):
    """Dense p = 2 system matrix over interior nodes, built from scratch."""
    assert fp.p == 2.0
    idx, n_ext = node_set(grid, dgrid)
    h, s, c = grid.h, fp.s, fp.c_norm
    m = grid.m
    k_max = dgrid.offsets.size
    mat = np.zeros((m, m))
    for i in range(m):
        pos = n_ext + 1 + i
        mat[i, i] += h
        for other in range(len(idx)):
            k = abs(idx[pos] - idx[other])
            if not 1 <= k <= k_max:
                continue
            d = dgrid.offsets[k - 1]
            wgt = c * kap[k - 1] * h * h / d ** (1.0 + 2.0 * s)
            mat[i, i] += wgt
            j = other - (n_ext + 1)
            if 0 <= j < m:
                mat[i, j] -= wgt
    coeff = c * kap[-1] * tail_coeff(dgrid, 2.0 * s)
    for i in range(m):
        mat[i, i] += coeff * h
    return mat


def linear_state_solve(grid, dgrid, fp, kap, f):
    mat = linear_state_matrix(grid, dgrid, fp, kap)
    return np.linalg.solve(mat, grid.h * np.asarray(f))


def _line_minimum(line, z0):
    """Minimize a smooth convex 1D function by root-finding its central
    finite-difference derivative (derivative information beats the
    sqrt(eps) localization barrier of value-only searches)."""
    delta = 1e-7 * (1.0 + abs(z0))

    def slope(z):
        return (line(z + delta) - line(z - delta)) / (2.0 * delta)

    g0 = slope(z0)
    if g0 == 0.0:
        return z0
    step = 0.5 * (1.0 + abs(z0))
    if g0 > 0.0:
        hi, lo = z0, z0 - step
        for _ in range(80):
            if slope(lo) <= 0.0:
                break
            step *= 2.0
            lo = z0 - step
        else:
            return z0
    else:
        lo, hi = z0, z0 + step
        for _ in range(80):
            if slope(hi) >= 0.0:
                break
            step *= 2.0
            hi = z0 + step
        else:
            return z0
    return float(brentq(slope, lo, hi, xtol=1e-13, rtol=8.9e-16))


def coordinate_descent(potential, m, x0=None, tol=1e-12, max_sweeps=4000):
    """Cyclic exact 1D minimization of a smooth convex function.

    Sweeps stop when the largest coordinate move falls below ``tol`` or
    stops shrinking at the finite-difference localization floor.
    """
    x = np.zeros(m) if x0 is None else np.array(x0, dtype=float)
    prev_move = np.inf
    stalled = 0
    for _ in range(max_sweeps):
        biggest_move = 0.0
        for k in range(m):
            def line(z, k=k):
                trial = x.copy()
                trial[k] = z
                return potential(trial)

            z_new = _line_minimum(line, x[k])
            biggest_move = max(biggest_move, abs(z_new - x[k]))
            x[k] = z_new
        if biggest_move <= tol:
            break
        if biggest_move <= 1e-9 and biggest_move >= 0.5 * prev_move:
            stalled += 1
            if stalled >= 5:
                break
        else:
            stalled = 0
        prev_move = biggest_move
    return x


def prox_objective(z, y, lam):
    z = np.asarray(z, dtype=float)
    return 0.5 * float(np.sum((z - y) ** 2)) + lam * float(
        np.sum(np.abs(np.diff(z)))
    )


def prox_grid_best(y, lam, step=1e-3):
    """Exhaustive grid search of the prox objective over the value hull."""
    y = np.asarray(y, dtype=float)
    lo = math.floor(np.min(y) / step) * step
    hi = math.ceil(np.max(y) / step) * step
    axis = np.arange(lo, hi + step / 2, step)
    grids = np.meshgrid(*([axis] * y.size), indexing="ij")
    cand = np.stack([g.ravel() for g in grids], axis=1)
    obj = 0.5 * np.sum((cand - y) ** 2, axis=1)
    if y.size > 1:
        obj += lam * np.sum(np.abs(np.diff(cand, axis=1)), axis=1)
    best = int(np.argmin(obj))
    return cand[best], float(obj[best])


def exhaustive_control_search(problem, free, step=0.02):
    """Enumerate the coefficient box on the free offsets; returns the best
    (kappa, objective) with lexicographically-smallest tie-breaking."""
    from fplap.control import tv_seminorm

    lo, hi = problem.bounds_lo, problem.bounds_hi
    axes = [
        np.linspace(lo[k], hi[k], int(round((hi[k] - lo[k]) / step)) + 1)
        for k in free
    ]
    base = problem.midpoint()
    best_obj, best_kappa = np.inf, None
    h = problem.asm.grid.h
    index = [0] * len(free)
    warm = None

    def assign(values):
        kap = base.copy()
        for pos, k in enumerate(free):
            kap[k] = values[pos]
        return kap

    import itertools

    for combo in itertools.product(*axes):
        kap = assign(combo)
        rep = problem.solve_inner(kap, u0=warm)
        warm = rep.u.interior
        diff = rep.u.interior - problem.xi
        obj = 0.5 * h * float(np.sum(diff * diff)) + tv_seminorm(kap)
        if obj < best_obj - 1e-15:
            best_obj, best_kappa = obj, kap
    return best_kappa, best_obj
