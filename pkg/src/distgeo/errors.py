"""Exception hierarchy shared by every distgeo module."""


class DistGeoError(Exception):
    """Base class for all engine errors."""


class InputError(DistGeoError):
    """Bad user input: malformed expressions, scenarios, or arguments."""


class ExprSyntaxError(InputError):
    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class ScenarioError(InputError):
    pass


class DimensionMismatchError(ScenarioError):
    pass


class NumericError(DistGeoError):
    """Failure of a numeric precondition at a specific point."""

    def __init__(self, message, point=None):
        self.point = None if point is None else [float(c) for c in point]
        if self.point is not None:
            message = f"{message} at p={self.point}"
        super().__init__(message)


class EvalDomainError(NumericError):
    """Expression evaluated outside its domain (log of non-positive, ...)."""

    def __init__(self, message, position=None, point=None):
        self.position = position
        if position is not None:
            message = f"{message} (node at position {position})"
        super().__init__(message, point)


class NotSPDError(NumericError):
    """Metric failed its Cholesky factorization."""


class RankDeficiencyError(NumericError):
    """Generators or normal candidates became linearly dependent."""


class NotASectionError(NumericError):
    """A field required to lie in D (or in its orthogonal) does not."""


class DegeneratePlaneError(NumericError):
    pass
