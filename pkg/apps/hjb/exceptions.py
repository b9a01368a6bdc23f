class HjbError(Exception):
    pass


class CflViolationError(HjbError):
    def __init__(self, dt, dx, speed):
        self.dt = dt
        self.dx = dx
        self.speed = speed
        super().__init__(f"CFL violated: dt={dt:.3e} * speed={speed:.3e} exceeds dx={dx:.3e}")


class UnsupportedDomainError(HjbError):
    """The grid solver handles one-dimensional Zero and Box operators only."""
