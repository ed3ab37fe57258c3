"""Learning exception classes."""


class DimensionMismatchError(ValueError):
    """Raised when vector/matrix shapes do not line up."""

    def __init__(self, operation: str, expected: object, got: object):
        self.operation = operation
        self.expected = expected
        self.got = got
        super().__init__(f"{operation}: expected {expected}, got {got}")


class CurvatureError(ArithmeticError):
    """Raised when a (dw, dg) pair violates the curvature condition of an update."""

    def __init__(self, rule: str, value: float, threshold: float):
        self.rule = rule
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"{rule} update rejected: curvature {value:.3e} <= threshold {threshold:.3e}"
        )
