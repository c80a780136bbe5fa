"""Solitary-wave ground states of the bi-harmonic coupled Schrodinger-KdV system

    bilap u + lambda1 u = u^3 + beta u v
    bilap v + lambda2 v = |v| v / 2 + beta u^2 / 2

computed by constrained minimisation on the Nehari manifold.
"""
from .grid import Field, GridSpec, make_grid
from .kernels import BACKEND
from .variational import Params, State, energy, nehari_project

__version__ = "0.1.0"

__all__ = ["BACKEND", "Field", "GridSpec", "Params", "State", "energy", "make_grid", "nehari_project"]
