import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vecmin.grid import Grid, make_grid

from conftest import smooth_random


def test_make_grid_1d_coordinates():
    g = make_grid(1, 8, 4.0)
    assert g.spacing == 1.0
    np.testing.assert_array_equal(g.axis, np.arange(-4.0, 4.0))


def test_make_grid_2d_counts():
    g = make_grid(2, 4, 2.0)
    assert g.total_points == 16
    assert g.spacing == 1.0
    assert g.shape == (4, 4)


@pytest.mark.parametrize("args", [(1, 7, 4.0), (4, 8, 1.0), (0, 8, 1.0), (1, 8, 0.0), (1, 8, -1.0), (1, 2, 1.0)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_spacing_times_points_is_box_length():
    for M in (4, 6, 100, 512):
        for L in (0.3, 1.0, 16.0, np.pi):
            g = make_grid(1, M, L)
            assert g.spacing * M == pytest.approx(2 * L, rel=1e-15)


def test_wavenumbers_order_and_nyquist():
    g = make_grid(1, 8, 4.0)
    j = np.array([0, 1, 2, 3, 4, -3, -2, -1])
    np.testing.assert_allclose(g.wavenumbers, np.pi / 4.0 * j)


def test_integrate_constant():
    g = make_grid(1, 64, 3.0)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(6.0, rel=1e-15)


def test_integrate_gaussian():
    g = make_grid(1, 512, 16.0)
    assert abs(g.integrate(np.exp(-g.axis**2)) - np.sqrt(np.pi)) < 1e-12


def test_integrate_linear(rng):
    g = make_grid(2, 16, 2.0)
    f, h = rng.standard_normal((2, *g.shape))
    a, b = 1.7, -0.3
    assert g.integrate(a * f + b * h) == pytest.approx(a * g.integrate(f) + b * g.integrate(h), abs=1e-12)


def test_laplacian_of_constant_is_zero():
    g = make_grid(2, 16, 2.0)
    assert np.max(np.abs(g.laplacian(np.full(g.shape, 3.0)))) < 1e-12


@pytest.mark.parametrize("j", [1, 3, 10, 31])
def test_laplacian_eigenmode(j):
    g = make_grid(1, 64, 5.0)
    f = np.cos(np.pi * j * g.axis / g.half_length)
    np.testing.assert_allclose(g.laplacian(f), -((np.pi * j / g.half_length) ** 2) * f, atol=1e-10)


def test_laplacian_vs_finite_differences_second_order(rng):
    # centered differences converge at O(h^2) towards the spectral answer
    errs = []
    for M in (64, 128, 256):
        g = make_grid(1, M, 8.0)
        f = np.exp(-g.axis**2) * np.cos(2 * g.axis)
        fd = (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / g.spacing**2
        errs.append(np.max(np.abs(fd - g.laplacian(f))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.1)


def test_grad_norm_sq_constant_and_sine():
    g = make_grid(1, 64, 3.0)
    assert g.grad_norm_sq(np.full(g.shape, 2.0)) == 0.0
    L = g.half_length
    assert abs(g.grad_norm_sq(np.sin(np.pi * g.axis / L)) - np.pi**2 / L) < 1e-10


def test_grad_norm_sq_zero_only_for_constants(rng):
    g = make_grid(1, 32, 2.0)
    assert g.grad_norm_sq(smooth_random(g, rng)) > 0


@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 64), (2, 16), (3, 8)]))
def test_parseval(seed, dims):
    g = make_grid(dims[0], dims[1], 2.5)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    fh = g.transform(f)
    assert np.sum(np.abs(fh) ** 2) == pytest.approx(g.integrate(f**2), rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 64), (2, 16), (3, 8)]))
def test_integration_by_parts(seed, dims):
    g = make_grid(dims[0], dims[1], 2.5)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    assert g.grad_norm_sq(f) == pytest.approx(-g.integrate(f * g.laplacian(f)), rel=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(-20, 20), st.integers(-20, 20))
def test_shift_equivariance(seed, a, b):
    g = make_grid(2, 16, 2.0)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    lhs = g.laplacian(g.shift(f, (a, b)))
    rhs = g.shift(g.laplacian(f), (a, b))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


def test_grid_is_immutable_and_hashable():
    g = make_grid(1, 8, 1.0)
    with pytest.raises(Exception):
        g.points = 16
    assert g == Grid(1, 8, 1.0)
    assert hash(g) == hash(Grid(1, 8, 1.0))


def test_torus_distance_wraps():
    g = make_grid(1, 8, 4.0)
    d = g.torus_distance((-4.0,))
    assert d[0] == 0.0
    assert d[-1] == 1.0  # x = 3 is one cell from -4 across the seam
    assert d.max() == 4.0


def test_spectral_tail():
    g = make_grid(1, 128, 8.0)
    assert g.spectral_tail(np.exp(-g.axis**2)) < 1e-12
    j = g.points // 2 - 2
    assert g.spectral_tail(np.cos(np.pi * j * g.axis / g.half_length)) == pytest.approx(1.0)
