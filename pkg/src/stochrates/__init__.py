"""Executable convergence rates for stochastic iterations, with Monte Carlo checks."""

from .errors import ConfigError, ContractError, DomainError, RangeError
from .moduli import SiccFunction, sicc_combine, sicc_from_name, sicc_log, sicc_power, verify_sicc
from .schedules import Schedule, parse_schedule

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContractError", "DomainError", "RangeError", "SiccFunction",
    "sicc_combine", "sicc_from_name", "sicc_log", "sicc_power", "verify_sicc",
    "Schedule", "parse_schedule", "__version__",
]
