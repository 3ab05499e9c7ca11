"""Discrete energies J and J_inf, their L^2 gradients, and the
Gagliardo-Nirenberg machinery behind the coercivity bound.

Sign convention: ``grad_J(u) = -Lap u - dF(x, u)``, so a constrained critical
point satisfies ``grad_J(u) = lam * u``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .field import VectorField, mass
from .grid import Grid
from .nonlin import AssumptionConstants, NonlinearitySpec

__all__ = [
    "EnergyBreakdown",
    "GNReport",
    "CoercivityBound",
    "energy",
    "energy_J",
    "energy_Jinf",
    "grad",
    "grad_J",
    "grad_Jinf",
    "multiplier",
    "el_residual",
    "gn_ratio",
    "gn_check",
    "gn_trial_fields",
    "estimate_gn_constant",
    "coercivity_bound",
]

FUNCTIONALS = ("J", "Jinf")


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic - self.potential

    def to_dict(self) -> dict:
        return {"kinetic": self.kinetic, "potential": self.potential, "total": self.total}


def _check_functional(functional: str):
    if functional not in FUNCTIONALS:
        raise ValueError(f"functional must be one of {FUNCTIONALS}, got {functional!r}")


def kinetic(u: VectorField) -> float:
    return 0.5 * sum(u.grid.grad_norm_sq(ui) for ui in u.values)


def energy(u: VectorField, spec: NonlinearitySpec, functional: str = "J") -> EnergyBreakdown:
    _check_functional(functional)
    g = u.grid
    F = spec.F if functional == "J" else spec.Finf
    pot = g.integrate(np.broadcast_to(F(g.radius, u.values), g.shape))
    return EnergyBreakdown(kinetic(u), pot)


def energy_J(u: VectorField, spec: NonlinearitySpec) -> EnergyBreakdown:
    return energy(u, spec, "J")


def energy_Jinf(u: VectorField, spec: NonlinearitySpec) -> EnergyBreakdown:
    return energy(u, spec, "Jinf")


def grad(u: VectorField, spec: NonlinearitySpec, functional: str = "J") -> VectorField:
    _check_functional(functional)
    g = u.grid
    dF = spec.dF if functional == "J" else spec.dFinf
    force = np.broadcast_to(dF(g.radius, u.values), u.values.shape)
    lap = np.stack([g.laplacian(ui) for ui in u.values])
    return u.with_values(-lap - force)


def grad_J(u: VectorField, spec: NonlinearitySpec) -> VectorField:
    return grad(u, spec, "J")


def grad_Jinf(u: VectorField, spec: NonlinearitySpec) -> VectorField:
    return grad(u, spec, "Jinf")


def multiplier(u: VectorField, spec: NonlinearitySpec, functional: str = "J", gradient=None) -> float:
    """L^2 projection coefficient of the gradient onto ``u``."""
    mu = mass(u)
    if not mu > 0:
        raise ValueError("multiplier undefined for a zero-mass field")
    gradient = grad(u, spec, functional) if gradient is None else gradient
    return gradient.inner(u) / mu


def el_residual(u: VectorField, spec: NonlinearitySpec, functional: str = "J") -> float:
    """Relative Euler-Lagrange residual ``||grad - lam u|| / ||grad||``."""
    return _residual_parts(u, spec, functional)[0]


def _residual_parts(u, spec, functional, gradient=None):
    gradient = grad(u, spec, functional) if gradient is None else gradient
    lam = multiplier(u, spec, functional, gradient)
    r = gradient - lam * u
    r_abs = np.sqrt(r.inner(r))
    g_norm = np.sqrt(gradient.inner(gradient))
    return r_abs / max(g_norm, np.finfo(float).eps), lam, r_abs


# -- Gagliardo-Nirenberg ------------------------------------------------------


@dataclass(frozen=True)
class GNReport:
    sigma: float
    lhs: float
    rhs: float
    A_dd: float
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _gn_sigma(dim: int, ell: float) -> float:
    return 0.5 * dim * ell / (ell + 2.0)


def gn_ratio(grid: Grid, f: np.ndarray, ell: float) -> float:
    """||f||_{l+2}^{l+2} / (||f||_2^{(1-s)(l+2)} ||grad f||_2^{s(l+2)}), i.e. the
    ratio with unit constant."""
    sigma = _gn_sigma(grid.dim, ell)
    lhs = grid.integrate(np.abs(f) ** (ell + 2.0))
    l2 = np.sqrt(grid.integrate(f**2))
    dl2 = np.sqrt(grid.grad_norm_sq(f))
    if l2 == 0 or dl2 == 0:
        raise ValueError("GN ratio needs a nonzero, nonconstant field")
    return lhs / (l2 ** ((1 - sigma) * (ell + 2.0)) * dl2 ** (sigma * (ell + 2.0)))


def gn_check(grid: Grid, f: np.ndarray, ell: float, A_dd: float) -> GNReport:
    if not (0 < ell <= 4.0 / grid.dim):
        raise ValueError(f"ell must lie in (0, 4/N], got {ell}")
    if not A_dd > 0:
        raise ValueError("GN constant must be positive")
    if not np.any(f):
        raise ValueError("GN check needs a nonzero field")
    sigma = _gn_sigma(grid.dim, ell)
    lhs = grid.integrate(np.abs(f) ** (ell + 2.0))
    l2 = np.sqrt(grid.integrate(f**2))
    dl2 = np.sqrt(grid.grad_norm_sq(f))
    rhs = A_dd * l2 ** ((1 - sigma) * (ell + 2.0)) * dl2 ** (sigma * (ell + 2.0))
    return GNReport(sigma=sigma, lhs=lhs, rhs=rhs, A_dd=A_dd, ratio=lhs / rhs)


def gn_trial_fields(grid: Grid) -> list[np.ndarray]:
    """Radial Gaussians of several widths and sech^p profiles, centered in the box."""
    L = grid.half_length
    r = grid.radius
    trials = []
    for w in (L / 32, L / 16, L / 8):
        trials.append(np.exp(-0.5 * (r / w) ** 2))
    for p in (0.25, 0.375, 0.5, 0.625, 0.75, 1.0, 1.5, 2.0):
        for w in (L / 32, L / 16):
            trials.append(np.cosh(r / w) ** (-p))
    return trials


def estimate_gn_constant(grid: Grid, ell: float, extra=()) -> float:
    """Largest GN ratio over the built-in trial family plus ``extra`` fields.

    A lower bound for the sharp constant. ``extra`` may hold arrays or
    VectorFields (every component is tried).
    """
    if not (0 < ell <= 4.0 / grid.dim):
        raise ValueError(f"ell must lie in (0, 4/N], got {ell}")
    fields = list(gn_trial_fields(grid))
    for e in extra:
        if isinstance(e, VectorField):
            fields.extend(e.values)
        else:
            fields.append(np.asarray(e))
    best = 0.0
    for f in fields:
        if np.any(f) and grid.grad_norm_sq(f) > 0:
            best = max(best, gn_ratio(grid, f, ell))
    return best


# -- coercivity ---------------------------------------------------------------


@dataclass(frozen=True)
class CoercivityBound:
    energy: float
    bound: float
    A1: float
    A2: float
    A3: float
    eps: float

    @property
    def slack(self) -> float:
        return self.energy - self.bound

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-12 * (1.0 + abs(self.energy))


def coercivity_bound(
    u: VectorField,
    spec: NonlinearitySpec,
    constants: AssumptionConstants,
    A_dd: float,
    A1_target: float = 0.25,
) -> CoercivityBound:
    """Lower bound J(u) >= A1 ||grad u||^2 - A2 c^2 - A3 c^{(1-s)(l+2)q}.

    ``eps`` is tuned so that A1 == A1_target. The pointwise bound
    |s|^{l+2} <= m^{l/2} sum |s_i|^{l+2} puts a factor m^{l/2} on A.
    """
    g = u.grid
    N, m = g.dim, u.m
    ell, A = constants.ell, constants.A
    sigma = _gn_sigma(N, ell)
    p = 4.0 / (N * ell)
    q = p / (p - 1.0)
    A_eff = A * m ** (ell / 2.0)
    eps = ((0.5 - A1_target) * p / A_eff) ** (1.0 / p)
    A1 = 0.5 - A_eff * eps**p / p
    A2 = A
    A3 = A_eff * A_dd**q * m / (q * eps**q)
    c2 = mass(u)
    c = np.sqrt(c2)
    grad_sq = 2.0 * kinetic(u)
    bound = A1 * grad_sq - A2 * c2 - A3 * c ** ((1 - sigma) * (ell + 2.0) * q)
    return CoercivityBound(
        energy=energy_J(u, spec).total, bound=float(bound), A1=A1, A2=A2, A3=A3, eps=eps
    )
