"""Exception types shared across the package."""


class EvaluationError(ArithmeticError):
    """A field evaluation produced a non-finite value or derivative."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SpectrumError(ValueError):
    """A matrix lies outside the domain of the polar decomposition."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConsistencyError(ValueError):
    """Input data violate the symmetry hypotheses of a linear solve."""


class NotInK(ValueError):
    """A matrix does not preserve the signature matrix."""


class InconsistentFrame(ValueError):
    """A frame and a metric that were supposed to match do not."""
