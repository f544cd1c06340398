import numpy as np
import pytest

from fplap import (
    ControlField,
    FracParams,
    PairAssembly,
    build_difference_grid,
    build_grid,
)


def make_setup(m=4, p=3.0, s=0.75, variant="regional", r_trunc=None, seed=0,
               a=0.0, b=1.0, c_norm=1.0, kappa_lo=0.5, kappa_hi=1.5):
    """Random small instance shared by many tests."""
    rng = np.random.default_rng(seed)
    grid = build_grid(a, b, m)
    if variant == "full" and r_trunc is None:
        r_trunc = 2.0 * (b - a)
    dgrid = build_difference_grid(grid, variant, r_trunc)
    fp = FracParams(s=s, p=p, c_norm=c_norm, variant=variant)
    asm = PairAssembly(grid, dgrid, fp)
    kappa = ControlField(
        rng.uniform(kappa_lo + 0.1, kappa_hi - 0.1, dgrid.size),
        kappa_lo,
        kappa_hi,
        kappa_lo,
    )
    f = rng.standard_normal(m)
    return {
        "rng": rng,
        "grid": grid,
        "dgrid": dgrid,
        "fp": fp,
        "asm": asm,
        "kappa": kappa,
        "f": f,
    }


@pytest.fixture
def setup():
    return make_setup()
