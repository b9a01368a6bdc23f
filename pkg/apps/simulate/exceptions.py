class SimulationError(Exception):
    pass


class InvalidSystemError(SimulationError):
    """Shapes, dimensions or the initial state of a system are inconsistent."""


class InvalidScaleError(SimulationError):
    pass


class InvalidConfigError(SimulationError):
    pass


class FastScaleInstabilityError(SimulationError):
    """The time step does not resolve the fast scale: dt > gamma / guard."""

    def __init__(self, dt, gamma, guard):
        self.dt = dt
        self.gamma = gamma
        self.guard = guard
        super().__init__(
            f"dt={dt:g} exceeds gamma/{guard:g}={gamma / guard:g}; refine dt or raise gamma"
        )


class NotInteriorError(SimulationError):
    def __init__(self, point, margin):
        self.point = point
        self.margin = margin
        super().__init__(f"reference point {point} is not interior (margin {margin:g})")
