"""Exception hierarchy shared by every module of the package."""


class BenardError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(BenardError, ValueError):
    """A configuration value is missing or malformed."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class HypothesisViolation(ConfigurationError):
    """A configuration value breaks a standing hypothesis of the model (q > 3, r range)."""


class DomainError(BenardError, ValueError):
    """An argument lies outside the admissible range of an operation."""


class StructuralError(BenardError, ValueError):
    """Fields live on different grids or have inconsistent shapes."""


class ViscosityBoundError(BenardError, ValueError):
    """Viscosity values escape the declared bounds [mu_min, mu_max]."""


class DegenerateInputError(BenardError, ValueError):
    """The requested quantity is a 0/0 or otherwise undefined for this input."""


class PositivityError(BenardError, ValueError):
    """Density took negative values beyond tolerance."""


class StabilityError(BenardError, RuntimeError):
    """Time step violates the advective stability limit."""


class SolverError(BenardError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    ``residual`` holds the last residual reached and ``stage`` the
    step stage that failed, when known.
    """

    def __init__(self, message, residual=None, stage=None):
        super().__init__(message)
        self.residual = residual
        self.stage = stage
