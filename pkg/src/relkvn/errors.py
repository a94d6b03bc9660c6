"""Exception types shared across the package."""


class RelkvnError(Exception):
    """Base class for all package errors."""


class UnassignedVariable(RelkvnError):
    """An expression was evaluated at a point missing one of its symbols."""


class DomainError(RelkvnError):
    """Evaluation hit a singularity (division by zero, sqrt of a negative real)."""


class ProbeExhausted(RelkvnError):
    """Random probing could not find enough well-defined sample points."""


class OrderCapExceeded(RelkvnError):
    """An operator product exceeded the configured derivation-order cap."""


class RepresentationMismatch(RelkvnError):
    """Operands carry different representation tags (velocity vs momentum)."""


class SpeedLimitBreached(RelkvnError):
    """A trajectory reached |v| >= 1; the step size or field is unusable."""


class NonFiniteState(RelkvnError):
    """A numerical state or trajectory produced NaN/Inf values."""


class ConfigError(RelkvnError):
    """A scenario file or CLI configuration is invalid."""


class UnknownIdentity(RelkvnError):
    """An unrecognized series-identity name was requested."""
