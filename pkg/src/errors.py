"""
Exception hierarchy shared by every module.

Configuration problems derive from ValueError (exit code 1 at the command line),
numerical failures derive from ArithmeticError (exit code 2).
"""


class ConfigError(ValueError):
    """A parameter or option is invalid before any computation starts."""


class InvalidDegree(ConfigError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


class KindDegreeMismatch(ConfigError):
    pass


class BracketInvalid(ConfigError):
    """The supplied bracket does not straddle the stability transition."""


class NumericalError(ArithmeticError):
    """A computation broke down (singularity, divergence, no convergence)."""


class SingularMatrix(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class InconsistentSymbol(NumericalError):
    """Stencil weights do not sum to one, so the symbol has no logarithm at theta=0."""


class DegenerateDependence(NumericalError):
    pass


class BranchFailure(NumericalError):
    pass


class DivergenceDetected(NumericalError):
    """Raised by the time stepper; carries the state reached before blow-up."""

    def __init__(self, message, state=None, history=None):
        super().__init__(message)
        self.state = state
        self.history = history if history is not None else []
