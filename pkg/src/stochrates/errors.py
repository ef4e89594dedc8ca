"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or references unknown names."""


class ContractError(RuntimeError):
    """A caller-supplied object does not satisfy the contract an operation needs."""


class RangeError(ValueError):
    """An iteration index lies beyond the simulated horizon."""
