import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctetris.imaging import (as_image, gaussian_convolve, gaussian_kernel, grad_x,
                             grad_x_adjoint, grad_y, grad_y_adjoint, is_normalized,
                             neg_laplacian)
from oracles import dense_matrix_of, dense_neg_laplacian, grad_x_loop, grad_y_loop

rng = np.random.default_rng(1234)


def test_as_image_rejects_bad_input():
    with pytest.raises(ValueError):
        as_image(np.zeros(4))
    with pytest.raises(ValueError):
        as_image(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        as_image(np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError):
        as_image(np.array([[0.0, 1.5]]))
    assert as_image(np.array([[0.0, 1.5]]), normalized=False).shape == (1, 2)
    assert not is_normalized(np.array([[-0.1]]))


def test_grad_constant_is_zero():
    u = np.full((5, 7), 0.3)
    assert not grad_x(u).any() and not grad_y(u).any()


def test_grad_x_ramp_last_column_zero():
    u = np.tile(np.arange(4.0), (3, 1))
    g = grad_x(u)
    assert np.array_equal(g[:, :3], np.ones((3, 3)))
    assert np.array_equal(g[:, 3], np.zeros(3))
    assert np.array_equal(grad_y(u.T), g.T)


def test_grad_matches_loop():
    u = rng.random((5, 5))
    assert np.array_equal(grad_x(u), grad_x_loop(u))
    assert np.array_equal(grad_y(u), grad_y_loop(u))


def test_adjoint_of_zero():
    assert not grad_x_adjoint(np.zeros((3, 4))).any()
    assert not grad_y_adjoint(np.zeros((3, 4))).any()


@pytest.mark.parametrize("grad,adj", [(grad_x, grad_x_adjoint), (grad_y, grad_y_adjoint)])
def test_adjoint_identity_7x6(grad, adj):
    for _ in range(20):
        u = rng.standard_normal((7, 6))
        p = rng.standard_normal((7, 6))
        assert abs(np.vdot(grad(u), p) - np.vdot(u, adj(p))) <= 1e-12


@pytest.mark.parametrize("grad,adj", [(grad_x, grad_x_adjoint), (grad_y, grad_y_adjoint)])
def test_adjoint_is_matrix_transpose(grad, adj):
    g = dense_matrix_of(grad, 4, 5)
    a = dense_matrix_of(adj, 4, 5)
    assert np.array_equal(a, g.T)


def test_neg_laplacian_x_part_dense_4x4():
    # -Δx u, assembled as the 1D path-graph Laplacian acting along rows
    n = 4
    path = np.diag([1.0, 2.0, 2.0, 1.0]) - np.eye(n, k=1) - np.eye(n, k=-1)
    lap_x = np.kron(np.eye(n), path)
    u = rng.random((n, n))
    assert np.allclose(grad_x_adjoint(grad_x(u)).ravel(), lap_x @ u.ravel(), atol=1e-14)


def test_neg_laplacian_dense_5x5_properties():
    m = dense_matrix_of(neg_laplacian, 5, 5)
    assert np.array_equal(m, dense_neg_laplacian(5, 5))
    assert np.array_equal(m, m.T)
    assert np.allclose(m.sum(axis=1), 0.0)
    assert np.linalg.eigvalsh(m).min() > -1e-12


def test_gaussian_kernel_normalized():
    for sigma in (0.3, 1.0, 2.0, 3.7):
        k = gaussian_kernel(sigma)
        assert abs(k.sum() - 1.0) <= 1e-12
        assert np.array_equal(k, k[::-1])
    with pytest.raises(ValueError):
        gaussian_kernel(0.0)


def test_convolve_constant():
    img = np.full((9, 11), 0.42)
    assert np.allclose(gaussian_convolve(img, 2.0), 0.42, atol=1e-15, rtol=0)


def test_convolve_impulse_peak():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    radius = 6
    k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / 2.0) ** 2)
    peak = (1.0 / k.sum()) ** 2
    assert gaussian_convolve(img, 2.0)[10, 10] == pytest.approx(peak, abs=1e-15)


def test_convolve_tiny_sigma_is_identity():
    img = rng.random((8, 8))
    assert np.abs(gaussian_convolve(img, 1e-6) - img).max() <= 1e-9


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(0, 1)))
def test_convolve_commutes_with_transpose(img):
    assert np.allclose(gaussian_convolve(img.T, 1.5), gaussian_convolve(img, 1.5).T,
                       atol=1e-14, rtol=0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 10), st.integers(3, 10)),
              elements=st.floats(-1, 1)))
def test_grad_shift_equivariant_interior(u):
    shifted = np.roll(u, 1, axis=1)
    # away from the wrapped column and the replicated last column
    assert np.allclose(grad_x(shifted)[:, 1:-1], np.roll(grad_x(u), 1, axis=1)[:, 1:-1])
