"""Local energy densities and currents of non-relativistic spin-1/2 states."""

from .grid import (Axis, BispinorField, Grid, GridError, PhysConstants, ScalarField,
                   SpinorField, VectorField, derivative, divergence, integrate,
                   surface_integral)
from .catalog import PacketSpec, realize
from .potential import Modulation, PotentialSpec

__version__ = "0.1.0"
