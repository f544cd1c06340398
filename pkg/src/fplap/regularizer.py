"""C1 cutoff family used by the (epsilon, p)-regularization.

``f_n`` is the identity below n**2, constant n**2 + 1 above n**2 + 1, and
a cubic Hermite blend in between:

    f_n(n**2 + t) = n**2 + h(t),   h(t) = -t**3 + t**2 + t,  t in [0, 1],

which matches value and slope at both junctions, is nondecreasing, and
overshoots the identity by at most delta = 4/27 (attained at t = 2/3).
Any C1 choice with these properties is admissible; the Hermite blend is
the simplest closed form, and delta is reported in run manifests so
results are reproducible against the exact cutoff used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: overshoot bound of the cubic Hermite blend, max of t^2 (1 - t) on [0, 1]
DELTA_BLEND = 4.0 / 27.0

# Gauss-Legendre rule on [-1, 1]; the blend integrand is analytic, so a
# fixed 24-point rule is exact to machine precision for our purposes.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class RegParams:
    """Regularization pair (epsilon, n) plus the fixed blend overshoot."""

    epsilon: float
    n: int
    delta: float = field(default=DELTA_BLEND)

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def _check_nonnegative(tau):
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be nonnegative")


def f_n(tau, n: int):
    """Evaluate the cutoff at tau >= 0.  Works elementwise on arrays."""
    _check_nonnegative(tau)
    tau = np.asarray(tau, dtype=float)
    n2 = float(n) * float(n)
    t = tau - n2
    # h(t) = t + t^2 (1 - t): stable form near the upper junction t = 1
    blend = n2 + (t + t * t * (1.0 - t))
    out = np.where(tau <= n2, tau, np.where(tau > n2 + 1.0, n2 + 1.0, blend))
    return float(out) if out.ndim == 0 else out


def f_n_prime(tau, n: int):
    """Derivative of ``f_n``; continuous across both junctions."""
    _check_nonnegative(tau)
    tau = np.asarray(tau, dtype=float)
    n2 = float(n) * float(n)
    t = tau - n2
    slope = -3.0 * t * t + 2.0 * t + 1.0
    out = np.where(tau <= n2, 1.0, np.where(tau > n2 + 1.0, 0.0, slope))
    return float(out) if out.ndim == 0 else out


def g_n(du, dx, s: float, n: int):
    """Cutoff applied to the squared s-difference quotient |du|^2 / dx^(2s)."""
    dx = np.asarray(dx, dtype=float)
    if np.any(dx <= 0):
        raise ValueError("dx must be positive (diagonal pairs are excluded)")
    du = np.asarray(du, dtype=float)
    return f_n(du * du / dx ** (2.0 * s), n)


def _blend_integral(t, eps: float, n2: float, half_pm2: float):
    """Integral of (eps + n^2 + h(sigma))^half_pm2 over [0, t], t in [0, 1]."""
    t = np.asarray(t, dtype=float)
    # map GL nodes from [-1, 1] to [0, t] for every t at once
    sigma = 0.5 * t[..., None] * (_GL_X + 1.0)
    vals = (eps + n2 + (sigma + sigma * sigma * (1.0 - sigma))) ** half_pm2
    return 0.5 * t * (vals @ _GL_W)


def reg_primitive(tau, rp: RegParams, p: float):
    """Primitive Phi(tau) = integral_0^tau (eps + f_n(sigma))^((p-2)/2) dsigma.

    The identity and saturation branches are in closed form; the blend
    segment is integrated with a fixed Gauss-Legendre rule.  For p = 2
    the integrand is 1 and Phi is the identity.
    """
    _check_nonnegative(tau)
    tau = np.asarray(tau, dtype=float)
    if p == 2.0:
        out = tau.copy()
        return float(out) if out.ndim == 0 else out
    eps = rp.epsilon
    n2 = float(rp.n) * float(rp.n)
    half_pm2 = 0.5 * (p - 2.0)
    half_p = 0.5 * p

    def core(sig):
        # primitive of (eps + sigma)^half_pm2, vanishing at 0
        return ((eps + sig) ** half_p - eps**half_p) / half_p

    at_n2 = core(n2)
    t = np.clip(tau - n2, 0.0, 1.0)
    blend = at_n2 + _blend_integral(t, eps, n2, half_pm2)
    top = at_n2 + _blend_integral(np.asarray(1.0), eps, n2, half_pm2)
    sat = top + (tau - (n2 + 1.0)) * (eps + n2 + 1.0) ** half_pm2
    out = np.where(tau <= n2, core(np.minimum(tau, n2)),
                   np.where(tau > n2 + 1.0, sat, blend))
    return float(out) if out.ndim == 0 else out
