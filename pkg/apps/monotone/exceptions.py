class OperatorError(Exception):
    pass


class OutsideDomainError(OperatorError):
    """A point lies outside the closure of D(A) beyond the tolerance."""

    def __init__(self, point, distance, tol):
        self.point = point
        self.distance = distance
        self.tol = tol
        super().__init__(f"point {point} is {distance:.3e} away from the domain closure (tol {tol:.0e})")


class InteriorOriginError(OperatorError):
    """0 must lie strictly inside D(A) for operators driving a simulation."""


class UnsupportedOperatorError(OperatorError):
    pass
