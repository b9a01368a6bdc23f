"""
Explicit Lax-Friedrichs solver for the 1D limit equation

    u_t in H(x, u_x) - <A(x), u_x>,   u(0, x) = h(x),

on a uniform grid. A is Zero (truncated window, linear extrapolation at
the window edges) or a normal-cone Box (reflected-control Hamiltonian on
inward one-sided differences at the endpoints).
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from apps.monotone.operators import NormalConeBox, Zero

from .exceptions import CflViolationError, UnsupportedDomainError
from .hamiltonian import reflected_hamiltonian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridConfig:
    dx: float = 1e-2
    T: float = 0.5
    dt: float = None                 # None: largest stable step dividing T
    window: tuple = (-2.0, 2.0)      # used for the Zero operator
    theta_factor: float = 1.25
    cfl: float = 0.9

    def __post_init__(self):
        if not self.dx > 0 or not self.T > 0:
            raise ValueError("dx and T must be positive")
        if self.theta_factor < 1:
            raise ValueError("theta_factor below 1 breaks monotonicity")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class GridSolution:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray      # (len(t), len(x))
    dx: float
    dt: float
    theta: float
    boundary: str

    @property
    def final(self):
        return self.values[-1]

    def at(self, points, step=-1):
        """Linear interpolation of u(t_step, .) at points."""
        return np.interp(np.asarray(points, dtype=float), self.x, self.values[step])

    def rows(self, every=1):
        for k in range(0, len(self.t), every):
            for j, xj in enumerate(self.x):
                yield [float(self.t[k]), float(xj), float(self.values[k, j])]


def _grid(lower, upper, dx):
    count = int(round((upper - lower) / dx)) + 1
    if count < 3:
        raise ValueError("grid needs at least three points")
    return np.linspace(lower, upper, count)


def _domain(A, cfg):
    if A.n != 1:
        raise UnsupportedDomainError(f"grid solver is one-dimensional, operator acts on R^{A.n}")
    if isinstance(A, NormalConeBox):
        return _grid(float(A.lower[0]), float(A.upper[0]), cfg.dx), 'box'
    if isinstance(A, Zero):
        return _grid(cfg.window[0], cfg.window[1], cfg.dx), 'window'
    raise UnsupportedDomainError(f"grid solver supports Zero and Box operators, got {A!r}")


def _one_sided(u, dx):
    """Forward and backward differences with linear extrapolation past the ends."""
    ext = np.concatenate([[2 * u[0] - u[1]], u, [2 * u[-1] - u[-2]]])
    return (ext[2:] - ext[1:-1]) / dx, (ext[1:-1] - ext[:-2]) / dx


def solve_1d(avg, A, h, cfg=None):
    cfg = cfg or GridConfig()
    x, boundary = _domain(A, cfg)
    dx = float(x[1] - x[0])
    b = avg.drift(x[None, :])[0]
    a = avg.diffusion(x[None, :])[0, 0]
    u = np.asarray(h(x[None, :]), dtype=float).copy()

    lipschitz = float(np.max(np.abs(np.diff(u)))) / dx
    slope_speed = float(np.max(np.abs(b)) + np.max(a) * lipschitz)
    theta = cfg.theta_factor * slope_speed
    speed = slope_speed + theta
    if cfg.dt is None:
        steps = 1 if speed == 0 else max(1, int(math.ceil(cfg.T * speed / (cfg.cfl * dx) - 1e-9)))
        dt = cfg.T / steps
    else:
        dt = cfg.dt
        steps = int(round(cfg.T / dt))
        if abs(steps * dt - cfg.T) > 1e-9 * cfg.T:
            raise ValueError(f"dt={dt} does not divide T={cfg.T}")
    if dt * speed > dx * (1 + 1e-12):
        raise CflViolationError(dt, dx, speed)

    values = np.empty((steps + 1, x.size))
    values[0] = u
    # outward normals at the box ends; A_* deactivates the outward direction there
    ends = [(j, float(A.active_normals(x[j:j + 1])[0][0])) for j in (0, x.size - 1)] if boundary == 'box' else []
    for k in range(steps):
        forward, backward = _one_sided(u, dx)
        p = 0.5 * (forward + backward)
        rate = b * p - 0.5 * a * p * p + 0.5 * theta * (forward - backward)
        for j, normal in ends:
            inward = backward[j] if normal > 0 else forward[j]
            rate[j] = reflected_hamiltonian(normal * b[j], a[j], normal * inward)
        worst = float(np.max(np.abs(b) + a * np.maximum(np.abs(forward), np.abs(backward))))
        if worst > theta * (1 + 1e-9) and theta > 0:
            raise CflViolationError(dt, dx, worst + theta)
        u = u + dt * rate
        values[k + 1] = u
    logger.info("hjb solved points=%d steps=%d dx=%.3g dt=%.3g theta=%.3g boundary=%s",
                x.size, steps, dx, dt, theta, boundary)
    return GridSolution(x=x, t=np.arange(steps + 1) * dt, values=values, dx=dx, dt=dt,
                        theta=theta, boundary=boundary)


@dataclass
class ResidualReport:
    max_residual: float
    checked: int
    excluded: int


def kink_mask(u, dx, kink_factor=10.0):
    """Interior cells whose second difference exceeds kink_factor * dx^2, widened by one cell."""
    second = np.abs(u[2:] - 2 * u[1:-1] + u[:-2])
    kink = second > kink_factor * dx * dx
    widened = kink.copy()
    widened[1:] |= kink[:-1]
    widened[:-1] |= kink[1:]
    return widened


def residual_check(sol: GridSolution, avg, A, kink_factor=10.0):
    """max |u_t - H(x, u_x)| over interior cells away from kinks, with central u_x."""
    A.check_domain(sol.x[None, :])
    x = sol.x[1:-1]
    b = avg.drift(x[None, :])[0]
    a = avg.diffusion(x[None, :])[0, 0]
    worst, checked, excluded = 0.0, 0, 0
    for k in range(1, len(sol.t)):
        before = sol.values[k - 1]
        u_t = (sol.values[k, 1:-1] - before[1:-1]) / sol.dt
        p = (before[2:] - before[:-2]) / (2 * sol.dx)
        residual = np.abs(u_t - (b * p - 0.5 * a * p * p))
        skip = kink_mask(before, sol.dx, kink_factor)
        checked += int((~skip).sum())
        excluded += int(skip.sum())
        if np.any(~skip):
            worst = max(worst, float(residual[~skip].max()))
    return ResidualReport(max_residual=worst, checked=checked, excluded=excluded)
