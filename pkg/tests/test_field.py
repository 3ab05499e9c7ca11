import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vecmin.field import (
    ResolutionWarning,
    VectorField,
    component_masses,
    dilate,
    lattice_shift,
    mass,
    project_mass,
    split,
)
from vecmin.grid import make_grid

from conftest import smooth_random


def bumps(g, centers, width=0.5):
    return sum(np.exp(-0.5 * (g.torus_distance(c) / width) ** 2) for c in centers)


def test_vectorfield_shape_checks():
    g = make_grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((2, 9)))
    u = VectorField(g, np.zeros(8))
    assert u.m == 1
    with pytest.raises(ValueError):
        u.values[0] = 1.0  # read-only


def test_mass_examples(rng):
    g = make_grid(1, 32, 3.0)
    assert mass(VectorField(g, np.zeros((2, 32)))) == 0.0
    a = 0.7
    assert mass(VectorField(g, np.full((2, 32), a))) == pytest.approx(2 * a * a * 6.0, rel=1e-14)
    u = VectorField(g, rng.standard_normal((2, 32)))
    assert mass(u) == pytest.approx(sum(component_masses(u)), rel=1e-14)


def test_project_mass_examples(rng):
    g = make_grid(2, 16, 2.0)
    u = VectorField(g, rng.standard_normal((2, *g.shape)))
    u1 = project_mass(u, 1.3)
    assert mass(u1) == pytest.approx(1.69, rel=1e-12)
    assert project_mass(u1, 1.3) is u1 or np.array_equal(project_mass(u1, 1.3).values, u1.values)
    v = project_mass(u, 1.0)
    w = project_mass(v, 2.0)
    np.testing.assert_allclose(w.values, 2 * v.values, rtol=1e-14)
    assert mass(w) == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(ValueError):
        project_mass(VectorField(g, np.zeros((1, *g.shape))), 1.0)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_project_mass_exact_and_idempotent(seed, c):
    g = make_grid(1, 64, 4.0)
    u = VectorField(g, np.random.default_rng(seed).standard_normal((3, 64)))
    p = project_mass(u, c)
    assert abs(mass(p) - c * c) <= 1e-12 * c * c
    np.testing.assert_array_equal(project_mass(p, c).values, p.values)


def test_dilate_identity():
    g = make_grid(1, 64, 8.0)
    u = VectorField(g, np.exp(-g.axis**2))
    assert dilate(u, 1.0) is u


def test_dilate_gaussian_closed_form():
    g = make_grid(1, 256, 8.0)
    u = VectorField(g, np.exp(-g.axis**2))
    d = dilate(u, 2.0)
    np.testing.assert_allclose(d.values[0], np.sqrt(2) * np.exp(-4 * g.axis**2), atol=1e-8)


@pytest.mark.parametrize("lam", [0.5, 0.8, 1.5, 2.0])
def test_dilate_preserves_mass(lam):
    g = make_grid(1, 256, 16.0)
    u = VectorField(g, np.exp(-g.axis**2))
    assert mass(dilate(u, lam)) == pytest.approx(mass(u), rel=1e-6)


def test_dilate_roundtrip_2d():
    g = make_grid(2, 128, 8.0)
    u = VectorField(g, np.exp(-g.radius**2))
    back = dilate(dilate(u, 2.0), 0.5)
    assert np.max(np.abs(back.values - u.values)) < 1e-6


def test_dilate_onto_finer_grid():
    g = make_grid(1, 64, 8.0)
    fine = make_grid(1, 512, 8.0)
    u = VectorField(g, np.exp(-0.5 * g.axis**2))
    d = dilate(u, 4.0, fine)
    np.testing.assert_allclose(d.values[0], 2.0 * np.exp(-8 * fine.axis**2), atol=1e-8)


def test_dilate_warns_when_unresolved():
    g = make_grid(1, 64, 8.0)
    u = VectorField(g, np.exp(-g.axis**2))
    with pytest.warns(ResolutionWarning):
        dilate(u, 8.0)
    with pytest.warns(ResolutionWarning):
        dilate(u, 0.1)  # spreads onto the box boundary
    with pytest.raises(ValueError):
        dilate(u, 0.0)


def test_lattice_shift(rng):
    g = make_grid(1, 64, 4.0)  # h = 1/8
    u = VectorField(g, rng.standard_normal((2, 64)))
    np.testing.assert_array_equal(lattice_shift(u, [0]).values, u.values)
    back = lattice_shift(lattice_shift(u, [3]), [-3])
    np.testing.assert_array_equal(back.values, u.values)
    s = lattice_shift(u, [2])
    assert mass(s) == mass(u) or abs(mass(s) - mass(u)) <= 1e-15 * mass(u)
    # v(x) = u(x + 2): sample at x_j equals u at x_{j + 16}
    np.testing.assert_array_equal(s.values[:, 0], u.values[:, 16])


def test_lattice_shift_preserves_gradient_norm(rng):
    g = make_grid(2, 16, 2.0)
    u = VectorField(g, smooth_random(g, rng))
    s = lattice_shift(u, [1, -1])
    assert g.grad_norm_sq(s.values[0]) == pytest.approx(g.grad_norm_sq(u.values[0]), rel=1e-12)


def test_lattice_shift_rejects_fractional_cells():
    g = make_grid(1, 10, 4.0)  # h = 0.8
    u = VectorField(g, np.ones(10))
    with pytest.raises(ValueError):
        lattice_shift(u, [1])
    g = make_grid(1, 8, 4.0)
    with pytest.raises(ValueError):
        lattice_shift(VectorField(g, np.ones(8)), [0.5])


def test_split_plateaus():
    g = make_grid(1, 256, 16.0)
    inside = VectorField(g, np.where(np.abs(g.axis) < 1.0, 1.0, 0.0))
    p = split(inside, 0.0, 1.0, 4.0)
    np.testing.assert_array_equal(p.v.values, inside.values)
    assert not np.any(p.w.values)
    outside = VectorField(g, np.where(np.abs(g.axis) > 9.0, 1.0, 0.0))
    p = split(outside, 0.0, 1.0, 4.0)
    assert not np.any(p.v.values)
    np.testing.assert_array_equal(p.w.values, outside.values)


def test_split_two_bumps_mass():
    g = make_grid(1, 512, 16.0)
    u = VectorField(g, bumps(g, [(0.0,), (-16.0,)], width=0.25))
    p = split(u, 0.0, 2.0, 5.0)
    assert p.inner_mass + p.outer_mass == pytest.approx(mass(u), abs=1e-10)
    assert p.annulus_mass < 1e-10


@pytest.mark.parametrize("radii", [(0.0, 1.0), (1.0, 2.0), (1.0, 1.5), (2.0, 20.0)])
def test_split_rejects_bad_radii(radii):
    g = make_grid(1, 64, 16.0)
    with pytest.raises(ValueError):
        split(VectorField(g, np.ones(64)), 0.0, *radii)


@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.2, 1.5),
    st.floats(1.05, 2.5),
    st.floats(-4.0, 4.0),
)
def test_split_invariants(seed, R0, ratio, y):
    g = make_grid(2, 32, 8.0)
    rng = np.random.default_rng(seed)
    u = VectorField(g, rng.standard_normal((2, *g.shape)))
    Rn = 2 * R0 * ratio
    p = split(u, (y, -y), R0, Rn)
    assert np.all(p.v.values * p.w.values == 0.0)
    d = g.torus_distance((y, -y))
    assert not np.any(p.v.values[:, d >= 2 * R0])
    assert not np.any(p.w.values[:, d <= Rn])
    assert np.all(np.abs(p.v.values) <= np.abs(u.values))
    assert np.all(np.abs(p.w.values) <= np.abs(u.values))
    assert p.inner_mass + p.outer_mass <= mass(u) + p.annulus_mass + 1e-12
