"""Exception types raised across the package."""


class ToricSolitonError(Exception):
    """Base class for all package errors."""


class EmptyPolyhedron(ToricSolitonError):
    pass


class NonPrimitiveNormal(ToricSolitonError):
    pass


class NotLineFree(ToricSolitonError):
    pass


class DimensionUnsupported(ToricSolitonError):
    pass


class NotFullDimensional(ToricSolitonError):
    pass


class OutsideLambda(ToricSolitonError):
    """The weight vector is not in the admissible cone; the integral diverges."""


class DegenerateDirection(ToricSolitonError):
    pass


class MaxIterExceeded(ToricSolitonError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class GridTouchesBoundary(ToricSolitonError):
    pass


class TargetOutsideImage(ToricSolitonError):
    pass


class ConvexityLost(ToricSolitonError):
    def __init__(self, message, s=None, last=None):
        super().__init__(message)
        self.s = s
        self.last = last


class NewtonDiverged(ToricSolitonError):
    def __init__(self, message, s=None, last=None):
        super().__init__(message)
        self.s = s
        self.last = last


class HypothesisFailed(ToricSolitonError):
    pass
