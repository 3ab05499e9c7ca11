"""Periodic box discretization of R^N with Fourier calculus.

Scalar fields are plain numpy arrays of shape ``grid.shape`` (row-major,
axis 0 first). All operators below are exact on the resolved trigonometric
span and treat the box ``[-L, L)^N`` as a torus.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "make_grid"]


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``points`` samples per axis on ``[-L, L)^dim``."""

    dim: int
    points: int
    half_length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points < 4 or self.points % 2:
            raise ValueError(f"points per axis must be even and >= 4, got {self.points}")
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def total_points(self) -> int:
        return self.points**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.half_length) ** self.dim

    def to_dict(self) -> dict:
        return {"N": self.dim, "M": self.points, "L": self.half_length}

    # -- coordinates -------------------------------------------------------

    @cached_property
    def axis(self) -> np.ndarray:
        """1D coordinates ``x_j = -L + j h``."""
        return -self.half_length + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1D wave numbers in FFT order, Nyquist mode taken positive."""
        M = self.points
        j = np.arange(M)
        j = np.where(j <= M // 2, j, j - M)
        return (np.pi / self.half_length) * j

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| at every grid point."""
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 on the full FFT grid."""
        ks = np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij")
        return sum(k**2 for k in ks)

    @cached_property
    def k_squared_half(self) -> np.ndarray:
        """|k|^2 on the rfftn half grid (last axis truncated)."""
        M = self.points
        half = np.abs(self.wavenumbers[: M // 2 + 1])
        axes = [self.wavenumbers] * (self.dim - 1) + [half]
        ks = np.meshgrid(*axes, indexing="ij")
        return sum(k**2 for k in ks)

    def torus_distance(self, center) -> np.ndarray:
        """Periodic distance from every grid point to ``center``."""
        center = np.broadcast_to(np.asarray(center, dtype=float), (self.dim,))
        period = 2.0 * self.half_length
        d2 = np.zeros(self.shape)
        for x, y in zip(self.coords, center):
            d = np.abs(x - y) % period
            d2 += np.minimum(d, period - d) ** 2
        return np.sqrt(d2)

    # -- calculus ----------------------------------------------------------

    def integrate(self, f: np.ndarray) -> float:
        """Rectangle rule ``h^N sum f`` (spectrally accurate on the torus)."""
        return float(self.cell_volume * np.sum(f))

    def transform(self, f: np.ndarray) -> np.ndarray:
        """Fourier coefficients scaled so that ``sum |f_hat|^2 == integrate(f**2)``."""
        scale = np.sqrt(self.cell_volume / self.total_points)
        return np.fft.fftn(f) * scale

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        fh = np.fft.rfftn(f)
        return np.fft.irfftn(-self.k_squared_half * fh, s=self.shape, axes=tuple(range(self.dim)))

    def grad_norm_sq(self, f: np.ndarray) -> float:
        """``int |grad f|^2`` computed as ``sum |k|^2 |f_hat|^2``."""
        fh = self.transform(f)
        return float(np.sum(self.k_squared * (fh.real**2 + fh.imag**2)))

    def shift(self, f: np.ndarray, cells) -> np.ndarray:
        """Circular shift by an integer number of grid cells per axis."""
        cells = np.broadcast_to(np.asarray(cells, dtype=int), (self.dim,))
        return np.roll(f, tuple(int(c) for c in cells), axis=tuple(range(self.dim)))

    def spectral_tail(self, f: np.ndarray) -> float:
        """Fraction of L^2 energy carried by modes with max |k_axis| above half the Nyquist."""
        fh = np.abs(np.fft.fftn(f)) ** 2
        total = fh.sum()
        if total == 0.0:
            return 0.0
        kabs = np.abs(self.wavenumbers)
        knyq = np.pi / self.spacing
        high = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl = [None] * self.dim
            sl[ax] = slice(None)
            high |= (kabs > 0.5 * knyq)[tuple(sl)]
        return float(fh[high].sum() / total)


def make_grid(N: int, M: int, L: float) -> Grid:
    return Grid(int(N), int(M), float(L))
