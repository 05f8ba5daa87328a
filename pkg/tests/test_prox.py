import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctetris.prox import (ProxConfig, gauss_seidel_sweep, kl_prox, lambert_w0, lambert_w0_exp,
                          project_box, soft_threshold)
from oracles import dense_neg_laplacian, gs_sweep_loop, kl_prox_oracle, lambert_bisection

rng = np.random.default_rng(99)


# ---------------------------------------------------------------- soft threshold / box

def test_soft_threshold_table():
    assert soft_threshold(0.8, 0.3) == pytest.approx(0.5, abs=1e-16)
    assert soft_threshold(-0.2, 0.3) == 0.0
    assert soft_threshold(-0.8, 0.3) == pytest.approx(-0.5, abs=1e-16)
    x = rng.standard_normal(50)
    assert np.array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ValueError):
        soft_threshold(1.0, -1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 1e3))
def test_soft_threshold_nonexpansive(a, b, g):
    assert abs(soft_threshold(a, g) - soft_threshold(b, g)) <= abs(a - b) * (1 + 1e-15) + 1e-12


def test_project_box():
    assert project_box(1.3) == 1.0
    assert project_box(-0.2) == 0.0
    assert project_box(0.5) == 0.5


# ---------------------------------------------------------------- Lambert W

def test_lambert_special_values():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-15)
    assert lambert_w0(1.0) == pytest.approx(lambert_bisection(1.0), abs=1e-14)
    assert lambert_w0(1.0) == pytest.approx(0.567143290409784, abs=1e-15)
    assert lambert_w0(-math.exp(-1.0)) == -1.0


def test_lambert_matches_bisection():
    for y in np.logspace(-8, 6, 40):
        assert lambert_w0(y) == pytest.approx(lambert_bisection(y), rel=1e-13)


def test_lambert_residual_grid():
    y = np.concatenate([-np.exp(-1.0) + np.logspace(-9, np.log10(np.exp(-1.0)), 200),
                        np.logspace(-12, 6, 400)])
    w = lambert_w0(y)
    resid = np.abs(w * np.exp(w) - y)
    assert (resid <= 1e-12 * np.maximum(1.0, np.abs(y))).all()
    assert (np.diff(w[np.argsort(y)]) >= 0).all()


def test_lambert_domain():
    with pytest.raises(ValueError):
        lambert_w0(-0.5)
    with pytest.raises(ValueError):
        lambert_w0(np.nan)


def test_lambert_exp_form():
    t = np.linspace(-30, 1, 50)
    assert np.allclose(lambert_w0_exp(t), lambert_w0(np.exp(t)), rtol=1e-14, atol=0)
    big = np.array([1.5, 10.0, 700.0, 1e4, 1e9])
    w = lambert_w0_exp(big)
    assert np.allclose(w + np.log(w), big, rtol=1e-14, atol=0)
    assert lambert_w0_exp(10.0) == pytest.approx(lambert_bisection(math.exp(10.0)), rel=1e-13)


# ---------------------------------------------------------------- KL prox

@pytest.mark.parametrize("x,vbar,gamma", [(1.0, 1.0, 1.0), (0.2, 0.05, 0.5)])
def test_kl_prox_examples(x, vbar, gamma):
    assert kl_prox(x, vbar, gamma) == pytest.approx(kl_prox_oracle(x, vbar, gamma), abs=1e-8)


def test_kl_prox_first_example_in_bracket():
    v = kl_prox(1.0, 1.0, 1.0)
    assert 0.0 < v <= 4.0
    # stationarity of v log v + (v - 1)^2 / 2
    assert math.log(v) + 1.0 + v - 1.0 == pytest.approx(0.0, abs=1e-13)


def test_kl_prox_vanishing_weight():
    x = rng.uniform(-1, 2, 200)
    vbar = rng.uniform(1e-6, 1, 200)
    v = kl_prox(x, vbar, 1e-10)
    assert np.abs(v - np.maximum(x, 0.0)).max() <= 1e-6


def test_kl_prox_matches_oracle_random():
    for _ in range(60):
        x, vbar, gamma = rng.uniform(-1, 2), 10 ** rng.uniform(-6, 0), 10 ** rng.uniform(-3, 1)
        oracle = kl_prox_oracle(x, vbar, gamma)
        assert kl_prox(x, vbar, gamma) == pytest.approx(oracle, abs=1e-8 * max(1.0, oracle))


def test_alternative_exponent_fails_oracle():
    # the exponent x/gamma - 1/vbar (instead of x/gamma - 1) is not the prox
    x, vbar, gamma = 0.2, 0.05, 0.5
    alt = gamma * lambert_w0((vbar / gamma) * math.exp(x / gamma - 1.0 / vbar))
    assert abs(alt - kl_prox_oracle(x, vbar, gamma)) > 1e-3


def test_kl_prox_floor_and_guards():
    cfg = ProxConfig(eps_kl=1e-3)
    assert kl_prox(0.3, -0.5, 0.1, cfg) == kl_prox(0.3, 1e-3, 0.1, cfg)
    assert kl_prox(-50.0, 1e-6, 1e-3) > 0.0
    with pytest.raises(ValueError):
        kl_prox(0.3, 0.1, 0.0)
    with pytest.raises(ValueError):
        ProxConfig(eps_kl=0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 2), st.floats(-1, 2), st.floats(-1, 1), st.floats(1e-3, 10))
def test_kl_prox_positive_monotone(x1, x2, vbar, gamma):
    lo, hi = sorted((x1, x2))
    a, b = kl_prox(lo, vbar, gamma), kl_prox(hi, vbar, gamma)
    assert a > 0 and b > 0
    assert a <= b * (1 + 1e-14)


def test_kl_prox_shapes():
    out = kl_prox(np.zeros((3, 4)), 0.5, 0.2)
    assert out.shape == (3, 4)
    assert isinstance(kl_prox(0.0, 0.5, 0.2), float)


# ---------------------------------------------------------------- Gauss-Seidel

def _dense(ny, nx, shift=1.0):
    return dense_neg_laplacian(ny, nx) + shift * np.eye(ny * nx)


def test_gs_constant_fixed_point():
    u = np.full((5, 6), 0.7)
    gauss_seidel_sweep(u, np.full((5, 6), 0.7), sweeps=1, shift=1.0)
    assert np.allclose(u, 0.7, atol=1e-15, rtol=0)


def test_gs_converges_to_dense_solve_4x4():
    rhs = rng.standard_normal((4, 4))
    u = np.zeros((4, 4))
    gauss_seidel_sweep(u, rhs, sweeps=500, shift=1.0)
    a = _dense(4, 4)
    assert np.abs(a @ u.ravel() - rhs.ravel()).max() <= 1e-10
    assert np.allclose(u.ravel(), np.linalg.solve(a, rhs.ravel()), atol=1e-10)


def test_gs_single_sweep_by_hand_3x3():
    rhs = np.zeros((3, 3))
    rhs[0, 0] = 1.0
    u = np.zeros((3, 3))
    gauss_seidel_sweep(u, rhs, sweeps=1, shift=1.0)
    # corner degree 2, edges 3, centre 4; each value uses already-updated
    # neighbours above and to the left
    u00 = 1 / 3
    u01 = u00 / 4
    u02 = u01 / 3
    u10 = u00 / 4
    u11 = (u01 + u10) / 5
    u12 = (u02 + u11) / 4
    u20 = u10 / 3
    u21 = (u11 + u20) / 4
    u22 = (u12 + u21) / 3
    expected = np.array([[u00, u01, u02], [u10, u11, u12], [u20, u21, u22]])
    assert np.allclose(u, expected, atol=1e-16, rtol=0)
    assert np.allclose(u, gs_sweep_loop(np.zeros((3, 3)), rhs, 1.0), atol=1e-16, rtol=0)


@pytest.mark.parametrize("shape", [(2, 2), (3, 5), (8, 8)])
def test_gs_error_contracts_monotonically(shape):
    rhs = rng.standard_normal(shape)
    exact = np.linalg.solve(_dense(*shape), rhs.ravel()).reshape(shape)
    u = rng.standard_normal(shape)
    errors = []
    for _ in range(60):
        gauss_seidel_sweep(u, rhs, 1, 1.0)
        errors.append(np.linalg.norm(u - exact))
    errors = np.array(errors)
    active = errors[:-1] > 1e-13
    assert (errors[1:][active] < errors[:-1][active]).all()


def test_gs_pure_laplacian_shift_zero():
    rhs = rng.standard_normal((4, 5))
    rhs -= rhs.mean()
    u = np.zeros((4, 5))
    gauss_seidel_sweep(u, rhs, sweeps=2000, shift=0.0)
    assert np.abs(dense_neg_laplacian(4, 5) @ u.ravel() - rhs.ravel()).max() <= 1e-10


def test_gs_argument_checks():
    with pytest.raises(ValueError):
        gauss_seidel_sweep(np.zeros((3, 3)), np.zeros((3, 4)))
    with pytest.raises(ValueError):
        gauss_seidel_sweep(np.zeros((3, 3)), np.zeros((3, 3)), sweeps=0)
    with pytest.raises(ValueError):
        gauss_seidel_sweep(np.zeros((4, 4))[:, ::2], np.zeros((4, 2)))
    with pytest.raises(ValueError):
        gauss_seidel_sweep(np.zeros((3, 3), dtype=np.float32), np.zeros((3, 3)))
