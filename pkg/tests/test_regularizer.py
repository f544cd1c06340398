import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fplap import DELTA_BLEND, RegParams, f_n, f_n_prime, g_n, reg_primitive


def test_identity_branch():
    assert f_n(1.0, 2) == 1.0
    assert f_n_prime(1.0, 2) == 1.0


def test_saturation_branch():
    assert f_n(6.0, 2) == 5.0
    assert f_n_prime(6.0, 2) == 0.0


def test_blend_midpoint_hand_value():
    # t = 0.5: h = -0.125 + 0.25 + 0.5 = 0.625
    assert f_n(4.5, 2) == pytest.approx(4.625, abs=1e-15)
    assert 4.5 <= f_n(4.5, 2) <= 4.5 + DELTA_BLEND
    # h'(0.5) = -0.75 + 1 + 1 = 1.25
    assert f_n_prime(4.5, 2) == pytest.approx(1.25, abs=1e-15)
    fd = (f_n(4.5 + 1e-6, 2) - f_n(4.5 - 1e-6, 2)) / 2e-6
    assert abs(fd - 1.25) <= 1e-6


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        f_n(-0.1, 2)
    with pytest.raises(ValueError):
        f_n_prime(-1e-9, 3)


def test_array_evaluation_matches_scalar():
    tau = np.linspace(0.0, 7.0, 101)
    vals = f_n(tau, 2)
    assert vals.shape == tau.shape
    for t, v in zip(tau, vals):
        assert f_n(float(t), 2) == v


@given(
    tau=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    n=st.integers(min_value=1, max_value=64),
)
@settings(max_examples=300, deadline=None)
def test_sandwich_and_branches(tau, n):
    val = f_n(tau, n)
    n2 = n * n
    if tau <= n2:
        assert val == tau
    elif tau > n2 + 1.0:
        assert val == n2 + 1.0
    else:
        assert tau - 1e-12 <= val <= tau + DELTA_BLEND + 1e-12


@given(n=st.integers(min_value=1, max_value=16), seed=st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_monotone_nondecreasing(n, seed):
    rng = np.random.default_rng(seed)
    tau = np.sort(rng.uniform(0.0, n * n + 3.0, 200))
    vals = f_n(tau, n)
    assert np.all(np.diff(vals) >= -1e-12)


def test_c1_junctions_fd():
    for n in (1, 2, 4, 8):
        n2 = n * n
        for tau in (n2 - 1e-9, n2 + 1e-9, n2 + 1.0 - 1e-9, n2 + 1.0 + 1e-9):
            fd = (f_n(tau + 1e-6, n) - f_n(tau - 1e-6, n)) / 2e-6
            assert abs(fd - f_n_prime(tau, n)) <= 1e-6


def test_quotient_cutoff_examples():
    assert g_n(0.0, 0.25, 0.75, 2) == 0.0
    # 0.01 / 0.25^1.5 = 0.08, identity branch
    assert g_n(0.1, 0.25, 0.75, 2) == pytest.approx(0.08, abs=1e-15)
    # 100 / 0.125 = 800 > 5, constant branch
    assert g_n(10.0, 0.25, 0.75, 2) == 5.0


def test_quotient_cutoff_rejects_zero_distance():
    with pytest.raises(ValueError):
        g_n(1.0, 0.0, 0.75, 2)


def test_reg_params_validation():
    RegParams(epsilon=0.1, n=1)
    with pytest.raises(ValueError):
        RegParams(epsilon=0.0, n=1)
    with pytest.raises(ValueError):
        RegParams(epsilon=0.1, n=0)
    assert RegParams(epsilon=0.1, n=3).delta == DELTA_BLEND


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("tau", [0.0, 0.5, 4.0, 4.3, 4.9, 5.0, 9.0])
def test_primitive_matches_adaptive_quadrature(p, tau):
    rp = RegParams(epsilon=0.05, n=2)

    def integrand(sigma):
        return (rp.epsilon + f_n(sigma, rp.n)) ** (0.5 * (p - 2.0))

    expected, _ = quad(integrand, 0.0, tau, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert reg_primitive(tau, rp, p) == pytest.approx(expected, abs=1e-10)


def test_primitive_identity_for_p2():
    rp = RegParams(epsilon=0.3, n=2)
    tau = np.array([0.0, 1e-18, 3.7, 12.0])
    assert np.array_equal(reg_primitive(tau, rp, 2.0), tau)
