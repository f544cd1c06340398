"""Discrete nonlocal forms, energies, seminorms and level-set diagnostics.

The double integrals over the domain (and, for the full variant, over the
truncated exterior) are discretized as direct nodal pair sums

    integral integral F(x, y) dx dy  ~=  sum_{i != j} F(x_i, x_j) h^2,

with the diagonal excluded.  Boundary nodes (and exterior nodes in the
full variant) carry the zero extension of the state, so their pairs
contribute jump terms but no degrees of freedom.  All structural
identities used downstream (symmetry, monotonicity, energy identity,
Minty) hold exactly at this discrete level.

Pair distances are looked up through integer index differences, never
recomputed from coordinates, so kernel-coefficient lookups are bit-exact
and even by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FULL, DifferenceGrid, FracParams, Grid
from .regularizer import RegParams, f_n, f_n_prime, reg_primitive


@dataclass(eq=False)
class ControlField:
    """Kernel coefficient sampled on the positive offsets, with box bounds."""

    values: np.ndarray
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    alpha: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        k = self.values.size
        self.bounds_lo = np.broadcast_to(
            np.asarray(self.bounds_lo, dtype=float), (k,)
        ).copy()
        self.bounds_hi = np.broadcast_to(
            np.asarray(self.bounds_hi, dtype=float), (k,)
        ).copy()
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if np.any(self.bounds_lo < self.alpha):
            raise ValueError("lower bound must be >= alpha everywhere")
        if np.any(self.bounds_lo > self.bounds_hi):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.values < self.bounds_lo) or np.any(
            self.values > self.bounds_hi
        ):
            raise ValueError("coefficient values violate the box bounds")

    @classmethod
    def constant(cls, value, size, lo=None, hi=None, alpha=None):
        value = float(value)
        lo = value if lo is None else lo
        hi = value if hi is None else hi
        alpha = float(np.min(lo)) if alpha is None else alpha
        return cls(np.full(size, value), lo, hi, alpha)

    def replace_values(self, values) -> "ControlField":
        return ControlField(values, self.bounds_lo, self.bounds_hi, self.alpha)


@dataclass(eq=False)
class StateField:
    """Interior nodal values; zero boundary/exterior extension is implicit."""

    interior: np.ndarray

    def __post_init__(self):
        self.interior = np.asarray(self.interior, dtype=float)
        if not np.all(np.isfinite(self.interior)):
            raise ValueError("state values must be finite")

    @classmethod
    def zeros(cls, m: int) -> "StateField":
        return cls(np.zeros(m))


@dataclass(eq=False)
class LevelSet:
    """Node pairs whose s-difference quotient exceeds the threshold.

    Pairs are counted ordered, matching the double-sum convention of the
    energies; ``measure_h`` is h^2 * count, and ``mu_h`` weights each pair
    by h^2 / d^(2s-1).
    """

    mask: np.ndarray
    count: int
    measure_h: float
    mu_h: float
    threshold: float


class PairAssembly:
    """Precomputed node set and pair weights for one (grid, offsets, params).

    Immutable after construction; every evaluation method is pure in its
    arguments, so instances can be shared freely across threads.
    """

    def __init__(self, grid: Grid, dgrid: DifferenceGrid, fp: FracParams):
        if dgrid.variant != fp.variant:
            raise ValueError("difference grid and parameters disagree on variant")
        self.grid = grid
        self.dgrid = dgrid
        self.fp = fp
        h, m = grid.h, grid.m
        k_max = dgrid.size
        n_ext = k_max - 1 if fp.variant == FULL else 0
        idx = np.arange(-n_ext, m + 2 + n_ext)
        self.nodes = grid.a + h * idx
        self.n_ext = n_ext
        self.interior = slice(n_ext + 1, n_ext + 1 + m)
        # nodes inside [a, b]; level sets are restricted to this block
        self.omega = slice(n_ext, n_ext + m + 2)

        diff = np.abs(idx[:, None] - idx[None, :])
        self.pair_mask = (diff >= 1) & (diff <= k_max)
        self.kidx = np.clip(diff - 1, 0, k_max - 1)
        self.dist = dgrid.offsets[self.kidx]
        w = h * h / self.dist ** (1.0 + fp.s * fp.p)
        w2 = h * h / self.dist ** (1.0 + 2.0 * fp.s)
        self.w = np.where(self.pair_mask, w, 0.0)
        self.w2 = np.where(self.pair_mask, w2, 0.0)

        if fp.variant == FULL:
            r = dgrid.r_trunc
            e_p = fp.s * fp.p
            e_2 = 2.0 * fp.s
            self.tail_p = 2.0 * r ** (-e_p) / e_p
            self.tail_2 = 2.0 * r ** (-e_2) / e_2
            self.r_pow_2s = r**e_2
        else:
            self.tail_p = 0.0
            self.tail_2 = 0.0
            self.r_pow_2s = None

    # -- plumbing ------------------------------------------------------------

    def embed(self, u: StateField) -> np.ndarray:
        if u.interior.size != self.grid.m:
            raise ValueError("state dimension does not match the grid")
        full = np.zeros(self.nodes.size)
        full[self.interior] = u.interior
        return full

    def kappa_matrix(self, kappa: ControlField) -> np.ndarray:
        if kappa.values.size != self.dgrid.size:
            raise ValueError("coefficient dimension does not match the offsets")
        return kappa.values[self.kidx]

    def load(self, f, v) -> float:
        return float(np.dot(np.asarray(f), np.asarray(v)) * self.grid.h)

    def _kappa_far(self, kappa: ControlField) -> float:
        # far-field kernel value: coefficient at the largest stored offset
        return float(kappa.values[-1])

    # -- forms ---------------------------------------------------------------

    def energy_form(self, u: StateField, v: StateField, kappa: ControlField) -> float:
        """Weak form of the state operator at u, tested against v."""
        fp = self.fp
        uu, vv = self.embed(u), self.embed(v)
        du = uu[:, None] - uu[None, :]
        dv = vv[:, None] - vv[None, :]
        fac = np.abs(du) ** (fp.p - 2.0)
        pair = np.sum(self.kappa_matrix(kappa) * fac * du * dv * self.w)
        total = self.grid.h * float(np.dot(u.interior, v.interior))
        total += 0.5 * fp.c_norm * float(pair)
        if fp.variant == FULL:
            ui, vi = u.interior, v.interior
            tail = np.sum(np.abs(ui) ** (fp.p - 2.0) * ui * vi)
            total += (
                fp.c_norm * self._kappa_far(kappa) * self.tail_p * float(tail) * self.grid.h
            )
        return total

    def regularized_form(
        self, u: StateField, v: StateField, kappa: ControlField, rp: RegParams
    ) -> float:
        """Weak form of the regularized operator; collapses to ``energy_form``
        when p = 2 because the regularization factor has exponent zero."""
        fp = self.fp
        uu, vv = self.embed(u), self.embed(v)
        du = uu[:, None] - uu[None, :]
        dv = vv[:, None] - vv[None, :]
        q = du * du / self.dist ** (2.0 * fp.s)
        fac = (rp.epsilon + f_n(q, rp.n)) ** (0.5 * (fp.p - 2.0))
        pair = np.sum(self.kappa_matrix(kappa) * fac * du * dv * self.w2)
        total = self.grid.h * float(np.dot(u.interior, v.interior))
        total += 0.5 * fp.c_norm * float(pair)
        if fp.variant == FULL:
            ui, vi = u.interior, v.interior
            qt = ui * ui / self.r_pow_2s
            ft = (rp.epsilon + f_n(qt, rp.n)) ** (0.5 * (fp.p - 2.0))
            tail = np.sum(ft * ui * vi)
            total += (
                fp.c_norm * self._kappa_far(kappa) * self.tail_2 * float(tail) * self.grid.h
            )
        return total

    # -- potentials ------------------------------------------------------------

    def energy_functional(self, u: StateField, f, kappa: ControlField) -> float:
        """Strictly convex potential whose critical point solves the state
        equation: its directional derivative at u in direction v equals
        ``energy_form(u, v) - load(f, v)``."""
        fp = self.fp
        uu = self.embed(u)
        du = uu[:, None] - uu[None, :]
        pair = np.sum(self.kappa_matrix(kappa) * np.abs(du) ** fp.p * self.w)
        h = self.grid.h
        total = fp.c_norm / (2.0 * fp.p) * float(pair)
        total += 0.5 * h * float(np.dot(u.interior, u.interior))
        total -= self.load(f, u.interior)
        if fp.variant == FULL:
            tail = np.sum(np.abs(u.interior) ** fp.p) / fp.p
            total += fp.c_norm * self._kappa_far(kappa) * self.tail_p * float(tail) * h
        return total

    def regularized_potential(
        self, u: StateField, f, kappa: ControlField, rp: RegParams
    ) -> float:
        """Convex potential of the regularized weak form (same contract as
        ``energy_functional``); identical to it when p = 2."""
        fp = self.fp
        uu = self.embed(u)
        du = uu[:, None] - uu[None, :]
        if fp.p == 2.0:
            pair_core = du * du
        else:
            d2s = self.dist ** (2.0 * fp.s)
            pair_core = reg_primitive(du * du / d2s, rp, fp.p) * d2s
        pair = np.sum(self.kappa_matrix(kappa) * pair_core * self.w2)
        h = self.grid.h
        total = 0.25 * fp.c_norm * float(pair)
        total += 0.5 * h * float(np.dot(u.interior, u.interior))
        total -= self.load(f, u.interior)
        if fp.variant == FULL:
            ui = u.interior
            if fp.p == 2.0:
                tail = 0.5 * float(np.sum(ui * ui))
            else:
                qt = ui * ui / self.r_pow_2s
                tail = 0.5 * self.r_pow_2s * float(np.sum(reg_primitive(qt, rp, fp.p)))
            total += fp.c_norm * self._kappa_far(kappa) * self.tail_2 * tail * h
        return total

    # -- norms and diagnostics ---------------------------------------------------

    def quasi_norm(self, u: StateField, kappa: ControlField, rp: RegParams) -> float:
        """p-th root of the coefficient-weighted regularized pair energy.

        A norm only for p = 2; for p > 2 it is the natural quasi-norm in
        which the a-priori bounds of the regularized problem are stated.
        """
        fp = self.fp
        uu = self.embed(u)
        du = uu[:, None] - uu[None, :]
        q = du * du / self.dist ** (2.0 * fp.s)
        fac = (rp.epsilon + f_n(q, rp.n)) ** (0.5 * (fp.p - 2.0))
        total = np.sum(self.kappa_matrix(kappa) * fac * du * du * self.w2)
        return float(total) ** (1.0 / fp.p)

    def gagliardo_seminorm(
        self, u: StateField, s: float | None = None, p: float | None = None
    ) -> float:
        """Discrete fractional seminorm (pair sum with h^2 / d^(1+sp) weights)."""
        s = self.fp.s if s is None else s
        p = self.fp.p if p is None else p
        uu = self.embed(u)
        du = np.abs(uu[:, None] - uu[None, :])
        w = np.where(
            self.pair_mask, self.grid.h**2 / self.dist ** (1.0 + s * p), 0.0
        )
        return float(np.sum(du**p * w)) ** (1.0 / p)

    def weighted_p_energy(self, u: StateField, kappa: ControlField) -> float:
        """Coefficient-weighted unregularized pair energy sum kappa |du|^p w."""
        uu = self.embed(u)
        du = np.abs(uu[:, None] - uu[None, :])
        return float(np.sum(self.kappa_matrix(kappa) * du**self.fp.p * self.w))

    def _omega_block(self, mat: np.ndarray) -> np.ndarray:
        return mat[self.omega, self.omega]

    def _level_mask(self, u: StateField, threshold: float) -> np.ndarray:
        uu = self.embed(u)[self.omega]
        du = np.abs(uu[:, None] - uu[None, :])
        dist = self._omega_block(self.dist)
        quot = du / dist**self.fp.s
        mask = quot > threshold
        np.fill_diagonal(mask, False)
        return mask

    def level_set(self, u: StateField, n: int, saturated: bool = True) -> LevelSet:
        """Enumerate the pairs over the base domain whose s-difference
        quotient exceeds sqrt(n^2 + 1) (``saturated=True``, where the
        cutoff is constant) or n (``saturated=False``)."""
        thr = float(np.sqrt(n * n + 1.0)) if saturated else float(n)
        mask = self._level_mask(u, thr)
        h = self.grid.h
        count = int(np.count_nonzero(mask))
        dist = self._omega_block(self.dist)
        mu = float(np.sum(np.where(mask, h * h / dist ** (2.0 * self.fp.s - 1.0), 0.0)))
        return LevelSet(
            mask=mask, count=count, measure_h=h * h * count, mu_h=mu, threshold=thr
        )

    def level_set_energy(
        self, u: StateField, kappa: ControlField, rp: RegParams, n: int | None = None
    ) -> float:
        """Portion of the regularized pair energy carried by the level set
        (including the operator normalization and the 1/2 pair factor)."""
        fp = self.fp
        n = rp.n if n is None else n
        mask = self._level_mask(u, float(np.sqrt(n * n + 1.0)))
        uu = self.embed(u)[self.omega]
        du = uu[:, None] - uu[None, :]
        dist = self._omega_block(self.dist)
        q = du * du / dist ** (2.0 * fp.s)
        fac = (rp.epsilon + f_n(q, rp.n)) ** (0.5 * (fp.p - 2.0))
        kmat = self._omega_block(self.kappa_matrix(kappa))
        w2 = self._omega_block(self.w2)
        total = np.sum(np.where(mask, kmat * fac * du * du * w2, 0.0))
        return 0.5 * fp.c_norm * float(total)

    # -- solver internals ----------------------------------------------------------

    def _pair_flux(self, uu, kappa, rp):
        """Per-pair flux psi(du) and its du-derivative, as full matrices.

        The masked weights vanish on the diagonal and beyond the
        truncation, so excluded pairs contribute exact zeros.
        """
        fp = self.fp
        du = uu[:, None] - uu[None, :]
        kmat = self.kappa_matrix(kappa)
        if rp is None:
            a = fp.c_norm * kmat * self.w
            absdu = np.abs(du)
            flux = a * absdu ** (fp.p - 2.0) * du
            dflux = a * (fp.p - 1.0) * absdu ** (fp.p - 2.0)
        else:
            a = fp.c_norm * kmat * self.w2
            q = du * du / self.dist ** (2.0 * fp.s)
            base = rp.epsilon + f_n(q, rp.n)
            flux = a * base ** (0.5 * (fp.p - 2.0)) * du
            dflux = a * base ** (0.5 * (fp.p - 4.0)) * (
                base + (fp.p - 2.0) * f_n_prime(q, rp.n) * q
            )
        return flux, dflux

    def _tail_flux(self, ui, kappa, rp):
        """Exterior tail flux per interior node and its u-derivative."""
        fp = self.fp
        if fp.variant != FULL:
            zero = np.zeros_like(ui)
            return zero, zero
        kf = self._kappa_far(kappa)
        if rp is None:
            a = fp.c_norm * kf * self.tail_p
            absu = np.abs(ui)
            return (
                a * absu ** (fp.p - 2.0) * ui,
                a * (fp.p - 1.0) * absu ** (fp.p - 2.0),
            )
        a = fp.c_norm * kf * self.tail_2
        q = ui * ui / self.r_pow_2s
        base = rp.epsilon + f_n(q, rp.n)
        dfac = base ** (0.5 * (fp.p - 4.0)) * (
            base + (fp.p - 2.0) * f_n_prime(q, rp.n) * q
        )
        return a * base ** (0.5 * (fp.p - 2.0)) * ui, a * dfac

    def gradient(self, u: StateField, f, kappa: ControlField, rp=None) -> np.ndarray:
        """Gradient of the (regularized) potential over interior values;
        equals the weak-form residual vector."""
        uu = self.embed(u)
        flux, _ = self._pair_flux(uu, kappa, rp)
        g = flux.sum(axis=1)[self.interior]
        tail, _ = self._tail_flux(u.interior, kappa, rp)
        return g + self.grid.h * (u.interior - np.asarray(f) + tail)

    def hessian(self, u: StateField, kappa: ControlField, rp=None) -> np.ndarray:
        """Dense Hessian of the (regularized) potential over interior values."""
        uu = self.embed(u)
        _, dflux = self._pair_flux(uu, kappa, rp)
        row_sum = dflux.sum(axis=1)
        hess = -dflux[self.interior, self.interior].copy()
        idx = np.arange(self.grid.m)
        hess[idx, idx] = row_sum[self.interior]
        _, dtail = self._tail_flux(u.interior, kappa, rp)
        hess[idx, idx] += self.grid.h * (1.0 + dtail)
        return hess
