"""Exception hierarchy. CLI maps ConfigError to exit code 2, NumericError to 3."""


class ExcitonError(Exception):
    pass


class ConfigError(ExcitonError):
    """Invalid or inconsistent model description."""


class GeometryError(ConfigError):
    """Degenerate or infeasible geometry."""


class NumericError(ExcitonError):
    """Failure of a numerical procedure."""


class IntegrationError(NumericError):
    """Time evolution failed (trace drift, non-finite generator)."""


class TransportError(NumericError):
    """Distribution could not be formed (no transport, too noisy)."""


class SteadyStateError(NumericError):
    """Steady-state solve failed or is non-unique."""
