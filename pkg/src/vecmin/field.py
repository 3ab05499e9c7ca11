"""m-component real fields on a Grid and the geometry of the mass sphere."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid

__all__ = [
    "VectorField",
    "SplitPair",
    "ResolutionWarning",
    "mass",
    "component_masses",
    "project_mass",
    "dilate",
    "lattice_shift",
    "split",
]


class ResolutionWarning(UserWarning):
    """A resampled field is under-resolved or leaks out of the box."""


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray  # shape (m, *grid.shape)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == self.grid.dim:
            v = v[None]
        if v.shape[1:] != self.grid.shape or v.shape[0] < 1:
            raise ValueError(f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.values[i]

    def with_values(self, values) -> VectorField:
        return VectorField(self.grid, values)

    def __add__(self, other: VectorField) -> VectorField:
        return self.with_values(self.values + other.values)

    def __sub__(self, other: VectorField) -> VectorField:
        return self.with_values(self.values - other.values)

    def __mul__(self, a: float) -> VectorField:
        return self.with_values(a * self.values)

    __rmul__ = __mul__

    def density(self) -> np.ndarray:
        """rho^2 = sum_i u_i^2."""
        return np.sum(self.values**2, axis=0)

    def inner(self, other: VectorField) -> float:
        return self.grid.integrate(np.sum(self.values * other.values, axis=0))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def mass(u: VectorField) -> float:
    return u.grid.integrate(u.density())


def component_masses(u: VectorField) -> list[float]:
    return [u.grid.integrate(ui**2) for ui in u.values]


_ON_SPHERE = 8 * np.finfo(float).eps


def project_mass(u: VectorField, c: float) -> VectorField:
    """Rescale ``u`` onto the sphere ``mass == c**2``."""
    mu = mass(u)
    if not mu > 0:
        raise ValueError("cannot project a zero-mass field onto the mass sphere")
    scale = c / np.sqrt(mu)
    # already on the sphere up to summation round-off: leave the field alone
    # so that projecting twice is bitwise idempotent
    if abs(scale - 1.0) <= _ON_SPHERE:
        return u
    out = u.with_values(scale * u.values)
    # one correction pass pins the mass to the last ulps
    fix = c / np.sqrt(mass(out))
    return out if abs(fix - 1.0) <= _ON_SPHERE else out.with_values(fix * out.values)


def _interp_axis(src: Grid, data: np.ndarray, targets: np.ndarray, axis: int) -> np.ndarray:
    """Evaluate the real trigonometric interpolant of ``data`` along ``axis`` at ``targets``.

    The Nyquist mode is taken as a cosine so the interpolant stays real.
    """
    M = src.points
    k = src.wavenumbers
    shifted = targets - src.axis[0]
    phase = np.exp(1j * np.outer(shifted, k))
    phase[:, M // 2] = np.cos(k[M // 2] * shifted)
    coeffs = np.fft.fft(data, axis=axis)
    out = np.tensordot(phase, coeffs, axes=([1], [axis]))
    return np.moveaxis(out.real / M, 0, axis)


def dilate(u: VectorField, lam: float, grid: Grid | None = None) -> VectorField:
    """Sample ``lam^{N/2} u(lam x)`` on ``grid`` (default: ``u.grid``).

    ``u`` is read as its trigonometric interpolant on the primary box and as
    zero outside it, so ``lam > 1`` compresses a single copy instead of tiling
    the torus. Emits ResolutionWarning when the result is under-resolved or
    carries noticeable mass on the box boundary.
    """
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    src = u.grid
    dst = src if grid is None else grid
    if dst.dim != src.dim or dst.half_length != src.half_length:
        raise ValueError("target grid must share dimension and box size")
    if lam == 1.0 and dst == src:
        return u
    L = src.half_length
    y = lam * dst.axis
    inside = (y >= -L) & (y < L)
    out = u.values
    for ax in range(1, src.dim + 1):
        shape = list(out.shape)
        shape[ax] = dst.points
        full = np.zeros(shape)
        if inside.any():
            sl = [slice(None)] * out.ndim
            sl[ax] = inside
            full[tuple(sl)] = _interp_axis(src, out, y[inside], ax)
        out = full
    out = lam ** (src.dim / 2.0) * out
    _check_resolution(VectorField(dst, out), lam)
    return VectorField(dst, out)


def _check_resolution(u: VectorField, lam: float, tol: float = 1e-8):
    g = u.grid
    rho = u.density()
    total = rho.sum()
    if total == 0.0:
        return
    tail = max(g.spectral_tail(ui) for ui in u.values)
    edge = np.zeros(g.shape, dtype=bool)
    for x in g.coords:
        edge |= np.abs(x) >= g.half_length - 2 * g.spacing
    leak = rho[edge].sum() / total
    if tail > tol:
        warnings.warn(
            f"dilation by {lam:g}: {tail:.2e} of the energy sits in the upper half spectrum",
            ResolutionWarning,
            stacklevel=3,
        )
    if leak > tol:
        warnings.warn(
            f"dilation by {lam:g}: {leak:.2e} of the mass sits on the box boundary",
            ResolutionWarning,
            stacklevel=3,
        )


def cells_per_unit(grid: Grid) -> int:
    """Number of grid cells in a unit length; raises unless ``1/h`` is an integer."""
    inv = 1.0 / grid.spacing
    n = int(round(inv))
    if n < 1 or abs(inv - n) > 1e-9 * inv:
        raise ValueError(f"lattice shifts need 1/h integral, got 1/h = {inv}")
    return n


def lattice_shift(u: VectorField, z) -> VectorField:
    """``v(x) = u(x + z)`` for an integer vector ``z``."""
    z = np.asarray(z)
    if z.shape != (u.grid.dim,) or not np.all(z == np.round(z)):
        raise ValueError(f"z must be an integer {u.grid.dim}-vector, got {z!r}")
    n = cells_per_unit(u.grid)
    cells = -n * z.astype(int)
    return u.with_values(np.stack([u.grid.shift(ui, cells) for ui in u.values]))


@dataclass(frozen=True, eq=False)
class SplitPair:
    v: VectorField
    w: VectorField
    center: tuple[float, ...]
    inner_radius: float
    outer_radius: float
    annulus_mass: float  # mass of u inside the two transition annuli

    @property
    def inner_mass(self) -> float:
        return mass(self.v)

    @property
    def outer_mass(self) -> float:
        return mass(self.w)


def inner_cutoff(dist: np.ndarray, R0: float) -> np.ndarray:
    """1 on dist <= R0, linear ramp to 0 at dist = 2 R0."""
    return np.clip(2.0 - dist / R0, 0.0, 1.0)


def outer_cutoff(dist: np.ndarray, Rn: float) -> np.ndarray:
    """0 on dist <= Rn, linear ramp to 1 at dist = 2 Rn."""
    return np.clip(dist / Rn - 1.0, 0.0, 1.0)


def split(u: VectorField, y, R0: float, Rn: float) -> SplitPair:
    """Cut ``u`` into a piece near ``y`` and a piece far from it with disjoint supports."""
    g = u.grid
    if not (0 < 2 * R0 < Rn < g.half_length):
        raise ValueError(f"need 0 < 2*R0 < Rn < L, got R0={R0}, Rn={Rn}, L={g.half_length}")
    y = tuple(float(t) for t in np.broadcast_to(np.asarray(y, dtype=float), (g.dim,)))
    dist = g.torus_distance(y)
    chi_in = inner_cutoff(dist, R0)
    chi_out = outer_cutoff(dist, Rn)
    # exact zeros outside the plateaus keep v_i w_i == 0 bitwise
    chi_in[dist >= 2 * R0] = 0.0
    chi_out[dist <= Rn] = 0.0
    annulus = ((dist > R0) & (dist < 2 * R0)) | ((dist > Rn) & (dist < 2 * Rn))
    eps_cut = g.integrate(np.where(annulus, u.density(), 0.0))
    return SplitPair(
        v=u.with_values(chi_in * u.values),
        w=u.with_values(chi_out * u.values),
        center=y,
        inner_radius=float(R0),
        outer_radius=float(Rn),
        annulus_mass=eps_cut,
    )
