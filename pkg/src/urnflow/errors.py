"""Exception types shared across the package."""


class UrnflowError(Exception):
    """Base class for all package errors."""


class ModelSpecError(UrnflowError):
    """A model definition violates its structural requirements."""


class KernelMassError(UrnflowError):
    """Outcome probabilities at a state do not account for all mass."""


class NegativeCountError(UrnflowError):
    """A sampled move would drive some type count below zero."""


class FlowDomainError(UrnflowError):
    """ODE integration left the simplex (blow-up or non-finite values)."""


class HorizonError(UrnflowError):
    """A query time lies beyond the recorded horizon."""


class ConfigError(UrnflowError):
    """An experiment configuration is malformed."""
