"""Constrained minimization of coupled nonlinear Schroedinger energies on a periodic box.

Submodules: ``grid`` (box, quadrature, spectral derivatives), ``field`` (vector
fields, mass sphere, dilation, splitting), ``nonlin`` (nonlinearities and
hypothesis checks), ``energy`` (J, J_inf, gradients, GN bounds), ``flow``
(normalized gradient flow), ``ccdiag`` (concentration diagnostics and lemma
verifiers), ``cli`` (command-line front end).
"""

from .energy import energy, energy_J, energy_Jinf, grad_J, grad_Jinf
from .field import VectorField, mass, project_mass
from .flow import FlowConfig, MinimizeResult, minimize, solve_multistart
from .grid import Grid, make_grid
from .nonlin import CoupledPower, PaperExample, PurePower

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "make_grid",
    "VectorField",
    "mass",
    "project_mass",
    "PaperExample",
    "CoupledPower",
    "PurePower",
    "energy",
    "energy_J",
    "energy_Jinf",
    "grad_J",
    "grad_Jinf",
    "FlowConfig",
    "MinimizeResult",
    "minimize",
    "solve_multistart",
]
