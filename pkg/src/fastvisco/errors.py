"""Exception and warning types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the documented range."""


class DomainError(ValueError):
    """An evaluator was asked for a point outside its regime."""


class AccuracyError(ArithmeticError):
    """Adaptive integration did not reach the requested tolerance.

    The best available estimate and its error estimate are kept on the
    exception so callers can decide whether to accept them.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class AdmissibilityError(ValueError):
    """The (q, l) pair violates ``1 < l < min(1 + 2/q, q1, q2)``."""


class AssemblyError(RuntimeError):
    """A finite element operator failed its structural check."""


class SolverError(RuntimeError):
    """The time stepping system could not be solved."""


class DivergenceError(SolverError):
    def __init__(self, step):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


class ValidityError(ValueError):
    """An SOE expansion is used beyond its validity horizon."""


class UnsupportedConfigurationError(ValueError):
    pass


class SoeValidityWarning(UserWarning):
    """Evaluation of an SOE expansion beyond ``T_max``."""
