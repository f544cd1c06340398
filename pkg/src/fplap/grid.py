"""Spatial discretization of the interval domain and the offset grid.

The domain (a, b) is discretized with m interior nodes at uniform spacing
h = (b - a) / (m + 1).  Kernel coefficients live on the *offset* grid of
positive node distances d_k = k * h; evenness of the kernel is structural
because lookups always go through |x_i - x_j|.

All pair distances are resolved through integer index differences, so a
pair (i, j) maps bit-exactly to the stored offset d_{|i-j|}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REGIONAL = "regional"
FULL = "full"
_VARIANTS = (REGIONAL, FULL)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid on [a, b] with m interior nodes.

    ``nodes`` holds the m + 2 base nodes x_i = a + i*h, i = 0..m+1.  For
    the full-space variant, exterior nodes are materialized later by the
    form assembly, extending this array on both sides.
    """

    a: float
    b: float
    m: int
    h: float
    nodes: np.ndarray

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")


@dataclass(frozen=True, eq=False)
class DifferenceGrid:
    """Positive offsets d_k = k*h, k = 1..K, on which the coefficient lives.

    Regional variant: K = m + 1 (all distances between base nodes).
    Full variant: K = floor(r_trunc / h), covering every pair interaction
    kept inside the truncation radius.
    """

    offsets: np.ndarray
    variant: str
    r_trunc: float | None = None

    @property
    def size(self) -> int:
        return int(self.offsets.size)


@dataclass(frozen=True)
class FracParams:
    """Fractional order s, exponent p and the kernel normalization constant.

    The regional variant needs 1/2 < s < 1; the full variant admits any
    0 < s < 1.  The normalization c_norm stands in for the (never
    numerically specified) dimensional constant of the operator.
    """

    s: float
    p: float
    c_norm: float = 1.0
    variant: str = REGIONAL

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == REGIONAL and not 0.5 < self.s < 1.0:
            raise ValueError("regional variant requires 1/2<s<1")
        if self.variant == FULL and not 0.0 < self.s < 1.0:
            raise ValueError("full variant requires 0<s<1")
        if self.p < 2.0:
            raise ValueError("p must be >= 2")
        if self.c_norm <= 0.0:
            raise ValueError("c_norm must be positive")


def build_grid(a: float, b: float, m: int) -> Grid:
    """Build the uniform grid with m interior nodes on (a, b)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not b > a:
        raise ValueError("b must be strictly greater than a")
    h = (b - a) / (m + 1)
    nodes = a + h * np.arange(m + 2)
    return Grid(a=float(a), b=float(b), m=int(m), h=h, nodes=nodes)


def build_difference_grid(
    grid: Grid, variant: str = REGIONAL, r_trunc: float | None = None
) -> DifferenceGrid:
    """Build the offset grid for one variant.

    For the full variant ``r_trunc`` bounds the pair interactions kept in
    the discrete sums; everything beyond is handled by the analytic tail
    correction.  It must exceed the domain diameter so that no pair of
    base nodes is ever dropped.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == REGIONAL:
        k_max = grid.m + 1
    else:
        if r_trunc is None:
            raise ValueError("truncation radius required for the full variant")
        if not r_trunc > grid.b - grid.a:
            raise ValueError("r_trunc must exceed the domain diameter b-a")
        # tolerate r_trunc given as an inexact multiple of h
        k_max = int(math.floor(r_trunc / grid.h + 1e-12))
    offsets = grid.h * np.arange(1, k_max + 1)
    return DifferenceGrid(
        offsets=offsets,
        variant=variant,
        r_trunc=None if variant == REGIONAL else float(r_trunc),
    )
