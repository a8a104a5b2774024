"""Two-particle quantum autonomous thermal motor: quadrature theory and QMD/MD simulation."""

__version__ = "0.1.0"

from .bath import BathSpec, MotorParams, Ohmic, SoftLorentzian, Exponential  # noqa: E402
from .exact_velocity import (ForceSpec, VelocityEstimate, steady_velocity,  # noqa: E402
                             classical_velocity, forced_velocity, single_particle_velocity)

__all__ = ["BathSpec", "MotorParams", "Ohmic", "SoftLorentzian", "Exponential", "ForceSpec",
           "VelocityEstimate", "steady_velocity", "classical_velocity", "forced_velocity",
           "single_particle_velocity", "__version__"]
