class FxtError(Exception):
    """Base class for solver errors."""


class InputError(FxtError, ValueError):
    """Malformed input: wrong dimension, out-of-domain argument."""


class InvalidSpecError(FxtError, ValueError):
    """Operator or problem spec violating its own invariants."""


class IllPosedParameterError(FxtError, ValueError):
    """A parameter (usually lambda) for which the requested map is not well defined."""


class OperatorEvaluationError(FxtError, ArithmeticError):
    """An operator returned non-finite values."""


class InfeasibleError(FxtError):
    """No lambda satisfies Assumption (A) for the given moduli."""

    def __init__(self, message, branch="infeasible"):
        super().__init__(message)
        self.branch = branch


class AssumptionError(FxtError):
    """A per-application assumption (A1/A2 window) is violated with enforcement on."""


class WindowError(FxtError, ValueError):
    """kappa1 outside the admissible window (1 - eps(delta), 1) or kappa2 <= 1."""

    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class NonConvergenceError(FxtError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
