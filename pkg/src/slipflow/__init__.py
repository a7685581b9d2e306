"""Barotropic compressible flow with density-dependent bulk viscosity on mapped discs.

Modules
-------
conformal    catalog of conformal maps of the unit disc and boundary geometry
fields       polar cell-centred grid, differential operators, slip test fields
greens       disc Neumann function pulled back through the map
elliptic     effective viscous flux and vorticity solves, representation formula
commutator   singular commutator integral and its pointwise bound
dynamics     explicit solver for density and velocity with slip walls
diagnostics  a-priori quantities along runs and inequality probes
cli          configuration files and the ``slipflow`` command
"""
from .conformal import ConformalMap
from .dynamics import Params, Simulation, State, initial_state
from .errors import SlipflowError
from .fields import DiscGrid

__version__ = "0.1.0"

__all__ = ["ConformalMap", "DiscGrid", "Params", "Simulation", "SlipflowError", "State", "initial_state"]
