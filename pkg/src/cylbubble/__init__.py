"""Multi-bubble ansatz and reduced-energy toolkit for the critical Lane-Emden system
on two circles of a cylinder."""
from .exponents import ExponentSet, default_exponents, validate_parameters
from .ground_state import GroundStateProfile, solve_ground_state
from .constants import ConstantTable, build_constant_table
from .geometry import Configuration, build_configuration
from .energy import EnergyBreakdown, Potentials, eval_I
from .reduced import F_expansion, find_critical_point

__version__ = "0.1.0"

__all__ = ["ExponentSet", "default_exponents", "validate_parameters", "GroundStateProfile",
           "solve_ground_state", "ConstantTable", "build_constant_table", "Configuration",
           "build_configuration", "EnergyBreakdown", "Potentials", "eval_I", "F_expansion",
           "find_critical_point", "__version__"]
