"""Integrable symplectic maps of lattice KdV-type equations and their checks."""

from .maps import FlowConfig, apply_map, iterate_orbit, lattice_evolve
from .models import Model, PhasePoint, Spectrum

__all__ = ["FlowConfig", "Model", "PhasePoint", "Spectrum", "apply_map", "iterate_orbit",
           "lattice_evolve"]
__version__ = "0.1.0"
