"""Nonlinear homological programming on cellular sheaves.

Modules: ``sheaf`` (graphs, sheaves, cochains, coboundary), ``potentials``
(edge potentials), ``dynamics`` (nonlinear Laplacian and diffusion),
``solver`` (homological programs and ADMM), ``control`` (dynamics sheaves and
multi-agent MPC), ``config``/``experiment``/``cli`` (JSON scenarios and runs).
"""

from .sheaf import CellularSheaf, Cochain0, Cochain1, Graph, coboundary, coboundary_transpose, constant_sheaf
from .potentials import EdgePotential, PotentialAssignment, SplitPotential
from .dynamics import DiffusionParams, LaplacianContext, apply_laplacian, diffuse
from .solver import AdmmParams, HomologicalProgram, admm_solve
from .control import Scenario, build_dynamics_sheaf, run_mpc

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "CellularSheaf",
    "Cochain0",
    "Cochain1",
    "constant_sheaf",
    "coboundary",
    "coboundary_transpose",
    "EdgePotential",
    "SplitPotential",
    "PotentialAssignment",
    "LaplacianContext",
    "DiffusionParams",
    "apply_laplacian",
    "diffuse",
    "AdmmParams",
    "HomologicalProgram",
    "admm_solve",
    "Scenario",
    "build_dynamics_sheaf",
    "run_mpc",
]
