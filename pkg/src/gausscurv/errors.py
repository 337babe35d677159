"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep the classes coarse.
"""


class GaussCurvError(Exception):
    """Base class for all library errors."""


class ParameterError(GaussCurvError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class OutOfDomainError(GaussCurvError, ValueError):
    """A sampled field was queried outside of its sample domain."""


class ContractViolation(GaussCurvError):
    """An operation was called with inputs that break its precondition."""


class NumericToleranceError(GaussCurvError):
    """A refinement loop failed to settle.

    ``last_values`` holds the final two refinement values.
    """

    def __init__(self, message, last_values=()):
        super().__init__(message)
        self.last_values = tuple(last_values)


class IllConditionedTailError(GaussCurvError):
    """Fitted tail exponents are not monotone in the weight exponent."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NormalizationError(GaussCurvError):
    """The curvature integral used for normalisation is zero or not finite."""


class NonconvergenceError(GaussCurvError):
    """A fixed-point iteration diverged or ran out of iterations."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class IntegrationError(GaussCurvError):
    """An ODE integration stopped before reaching its end point."""


class RangeError(GaussCurvError):
    """A root bracket could not be found in the admissible interval."""


class ConfigError(GaussCurvError):
    """Malformed experiment configuration."""

    def __init__(self, message, key=None, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.key = key
        self.line = line
