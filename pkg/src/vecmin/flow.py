"""Normalized gradient flow on the mass sphere.

Each iteration takes a descent step for J (or J_inf) and rescales back onto
``mass == c**2``. The semi-implicit scheme treats ``-Lap`` implicitly:

    (1 + tau (|k|^2 - mu)) u_hat+ = FFT(u + tau (dF(x, u) + (lam - mu) u))

with ``lam`` the current multiplier estimate and ``mu = min(lam, 0)``. Keeping
the ``lam u`` term makes the fixed points of step + projection exactly the
Euler-Lagrange solutions; moving its negative part to the left keeps the step
contractive for large ``tau``, so the default step is large.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .energy import EnergyBreakdown, _residual_parts, energy, grad
from .field import VectorField, mass, project_mass
from .grid import Grid
from .nonlin import NonlinearitySpec

__all__ = [
    "FlowConfig",
    "FlowError",
    "TraceRow",
    "MinimizeResult",
    "ScanPoint",
    "minimize",
    "default_init",
    "multistart_inits",
    "solve_multistart",
    "scan_mass",
]

log = logging.getLogger(__name__)

SCHEMES = ("explicit", "semi-implicit")
INIT_STYLES = ("gaussian-bumps", "random-smooth", "constant")
MULTISTART_STYLES = ("gaussian-bumps", "random-smooth")
BASIN_TOL = 1e-4


class FlowError(RuntimeError):
    """The flow hit a non-finite energy or could not find a descent step."""


@dataclass(frozen=True)
class FlowConfig:
    scheme: str = "semi-implicit"
    tau: float = 1000.0
    max_iters: int = 5000
    residual_tol: float = 1e-6
    energy_tol: float = 1e-10
    stagnation_window: int = 10
    backtracking: bool = True
    shrink: float = 0.5
    max_halvings: int = 30
    seed: int = 0
    multistart: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not (self.residual_tol > 0 and self.energy_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


class TraceRow(NamedTuple):
    iter: int
    energy: float
    kinetic: float
    potential: float
    mass_error: float
    residual: float
    tau: float


@dataclass
class MinimizeResult:
    minimizer: VectorField
    energy: float
    breakdown: EnergyBreakdown
    multiplier: float
    residual: float
    iterations: int
    trace: list[TraceRow]
    converged: bool
    stop_reason: str
    energy_error: float
    c: float
    functional: str = "J"
    start_energies: list[float] = field(default_factory=list)
    start_converged: list[bool] = field(default_factory=list)
    multiple_minima: bool = False
    other_starts_mass_error: float = 0.0

    @property
    def max_mass_error(self) -> float:
        """Largest relative mass drift over this run and every sibling multistart run."""
        return max(max(row.mass_error for row in self.trace), self.other_starts_mass_error)

    def summary(self) -> dict:
        return {
            "c": self.c,
            "functional": self.functional,
            "energy": self.energy,
            "kinetic": self.breakdown.kinetic,
            "potential": self.breakdown.potential,
            "multiplier": self.multiplier,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "energy_error": self.energy_error,
            "max_mass_error": self.max_mass_error,
            "start_energies": list(self.start_energies),
            "start_converged": list(self.start_converged),
            "multiple_minima": self.multiple_minima,
        }


def _step(u: VectorField, gradient: VectorField, lam: float, force, tau: float, scheme: str) -> np.ndarray:
    if scheme == "explicit":
        return u.values - tau * gradient.values
    g = u.grid
    shift = min(lam, 0.0)
    rhs = u.values + tau * (force + (lam - shift) * u.values)
    axes = tuple(range(1, g.dim + 1))
    rh = np.fft.rfftn(rhs, axes=axes)
    rh /= 1.0 + tau * (g.k_squared_half - shift)
    return np.fft.irfftn(rh, s=g.shape, axes=axes)


def _force(u: VectorField, spec: NonlinearitySpec, functional: str) -> np.ndarray:
    dF = spec.dF if functional == "J" else spec.dFinf
    return np.broadcast_to(dF(u.grid.radius, u.values), u.values.shape)


def _energy_error(E: EnergyBreakdown, r_abs: float, lam: float, last_change: float) -> float:
    roundoff = 64 * np.finfo(float).eps * (abs(E.kinetic) + abs(E.potential))
    return float(max(last_change, r_abs**2 / max(abs(lam), 1e-3), roundoff))


def minimize(
    init: VectorField,
    c: float,
    spec: NonlinearitySpec,
    config: FlowConfig | None = None,
    functional: str = "J",
    callback: Callable[[int, VectorField], None] | None = None,
) -> MinimizeResult:
    """Minimize J (or J_inf) over the sphere ``mass == c**2`` starting from ``init``."""
    config = config or FlowConfig()
    if not c > 0:
        raise ValueError("mass parameter c must be positive")
    if not mass(init) > 0:
        raise ValueError("initial field has zero mass")
    c2 = c * c
    u = project_mass(init, c)
    E = energy(u, spec, functional)
    if not np.isfinite(E.total):
        raise FlowError("non-finite energy at iteration 0")
    gradient = grad(u, spec, functional)
    res, lam, r_abs = _residual_parts(u, spec, functional, gradient)
    tau = config.tau
    trace = [TraceRow(0, E.total, E.kinetic, E.potential, abs(mass(u) - c2) / c2, res, 0.0)]
    if callback is not None:
        callback(0, u)

    it = 0
    calm = 0
    last_change = 0.0
    stop = "max_iters"
    while True:
        if res <= config.residual_tol:
            stop = "residual"
            break
        if it >= config.max_iters:
            break
        force = _force(u, spec, functional)
        tau_try = tau
        accepted = None
        for _ in range(config.max_halvings + 1):
            cand = project_mass(u.with_values(_step(u, gradient, lam, force, tau_try, config.scheme)), c)
            E_new = energy(cand, spec, functional)
            if not np.isfinite(E_new.total) or not cand.is_finite():
                if not config.backtracking:
                    raise FlowError(f"non-finite energy at iteration {it + 1}")
            elif not config.backtracking or E_new.total <= E.total:
                accepted = (cand, E_new)
                break
            tau_try *= config.shrink
        if accepted is None:
            # an increase at round-off level means the flow has stalled, not failed
            noise = 64 * np.finfo(float).eps * (abs(E.kinetic) + abs(E.potential))
            if np.isfinite(E_new.total) and E_new.total - E.total <= noise:
                stop = "stalled"
                break
            raise FlowError(f"backtracking exhausted at iteration {it + 1} (energy {E.total:.17g})")
        it += 1
        u, E_prev, E = accepted[0], E, accepted[1]
        last_change = abs(E.total - E_prev.total)
        gradient = grad(u, spec, functional)
        res, lam, r_abs = _residual_parts(u, spec, functional, gradient)
        trace.append(TraceRow(it, E.total, E.kinetic, E.potential, abs(mass(u) - c2) / c2, res, tau_try))
        if callback is not None:
            callback(it, u)
        calm = calm + 1 if last_change <= config.energy_tol * abs(E.total) else 0
        if calm >= config.stagnation_window:
            stop = "energy_stagnation"
            break
        tau = min(config.tau, tau_try / config.shrink)

    return MinimizeResult(
        minimizer=u,
        energy=E.total,
        breakdown=E,
        multiplier=lam,
        residual=res,
        iterations=it,
        trace=trace,
        converged=res <= config.residual_tol,
        stop_reason=stop,
        energy_error=_energy_error(E, r_abs, lam, last_change),
        c=float(c),
        functional=functional,
    )


def default_init(grid: Grid, m: int, c: float, style: str = "gaussian-bumps", seed: int | None = None) -> VectorField:
    """Starting field on the sphere ``mass == c**2``.

    ``gaussian-bumps`` with ``seed=None`` is a centered radial Gaussian shared
    equally by all components; an integer seed jitters centers and widths.
    """
    if style not in INIT_STYLES:
        raise ValueError(f"init style must be one of {INIT_STYLES}, got {style!r}")
    L = grid.half_length
    if style == "constant":
        vals = np.ones((m, *grid.shape))
    elif style == "gaussian-bumps":
        if seed is None:
            vals = np.broadcast_to(np.exp(-0.5 * (grid.radius / (L / 8)) ** 2), (m, *grid.shape)).copy()
        else:
            rng = np.random.default_rng(seed)
            vals = np.empty((m, *grid.shape))
            for i in range(m):
                center = rng.uniform(-L / 4, L / 4, grid.dim)
                width = L / 8 * rng.uniform(0.5, 1.5)
                vals[i] = np.exp(-0.5 * (grid.torus_distance(center) / width) ** 2)
    else:
        rng = np.random.default_rng(0 if seed is None else seed)
        noise = rng.standard_normal((m, *grid.shape))
        axes = tuple(range(1, grid.dim + 1))
        width = L / 4
        nh = np.fft.fftn(noise, axes=axes) * np.exp(-0.5 * grid.k_squared * width**2)
        vals = np.fft.ifftn(nh, axes=axes).real
    u = VectorField(grid, vals)
    # equal share of the mass per component
    per = np.sqrt(np.array([grid.integrate(v**2) for v in u.values]))
    vals = u.values / per.reshape((m,) + (1,) * grid.dim) * (c / np.sqrt(m))
    return project_mass(VectorField(grid, vals), c)


def multistart_inits(grid: Grid, m: int, c: float, config: FlowConfig) -> list[VectorField]:
    """Start 0 is the centered default; later starts cycle styles with incremented seeds."""
    inits = [default_init(grid, m, c)]
    for i in range(1, config.multistart):
        style = MULTISTART_STYLES[i % len(MULTISTART_STYLES)]
        inits.append(default_init(grid, m, c, style, seed=config.seed + i))
    return inits


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def solve_multistart(
    grid: Grid,
    c: float,
    spec: NonlinearitySpec,
    config: FlowConfig | None = None,
    functional: str = "J",
    inits: list[VectorField] | None = None,
) -> MinimizeResult:
    """Run the flow from several starts; return the lowest converged energy."""
    config = config or FlowConfig()
    inits = inits if inits is not None else multistart_inits(grid, spec.m, c, config)

    def run(init):
        try:
            return minimize(init, c, spec, config, functional)
        except FlowError as exc:
            log.warning("multistart run failed: %s", exc)
            return None

    results = _map(run, inits, config.threads)
    ok = [r for r in results if r is not None]
    if not ok:
        raise FlowError("every multistart run failed")
    pool = [r for r in ok if r.converged] or ok
    best = min(pool, key=lambda r: r.energy)
    energies = [r.energy if r is not None else float("nan") for r in results]
    conv = [bool(r is not None and r.converged) for r in results]
    for i, e in enumerate(energies):
        log.info("start %d: energy %.12g converged %s", i, e, conv[i])
    conv_e = [r.energy for r in ok if r.converged]
    spread = max(conv_e) - min(conv_e) if conv_e else 0.0
    best = replace(
        best,
        start_energies=energies,
        start_converged=conv,
        multiple_minima=spread > BASIN_TOL * max(1.0, abs(best.energy)),
        other_starts_mass_error=max(r.max_mass_error for r in ok),
    )
    return best


@dataclass
class ScanPoint:
    c: float
    energy: float
    multiplier: float
    residual: float
    converged: bool
    result: MinimizeResult


def scan_mass(
    grid: Grid,
    c_values,
    spec: NonlinearitySpec,
    config: FlowConfig | None = None,
    functional: str = "J",
    warm_start: bool = True,
) -> list[ScanPoint]:
    """Minimum energy along a sorted list of masses.

    With ``warm_start`` the previous minimizer, rescaled onto the new sphere,
    replaces the first (default) start.
    """
    config = config or FlowConfig()
    c_values = [float(c) for c in c_values]
    if not c_values:
        raise ValueError("c_values must be nonempty")
    if any(c <= 0 for c in c_values):
        raise ValueError("c_values must be positive")
    if any(b < a for a, b in zip(c_values, c_values[1:])):
        raise ValueError("c_values must be sorted ascending")
    out: list[ScanPoint] = []
    prev = None
    for c in c_values:
        inits = multistart_inits(grid, spec.m, c, config)
        if warm_start and prev is not None:
            inits[0] = project_mass(prev.minimizer, c)
        res = solve_multistart(grid, c, spec, config, functional, inits)
        out.append(ScanPoint(c, res.energy, res.multiplier, res.residual, res.converged, res))
        prev = res
    return out
