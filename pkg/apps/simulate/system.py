"""
Problem data for the slow-fast system

    dX in -A(X)dt + b1(X,Y)dt + sqrt(eps) sigma1(X,Y) dW1,   X_0 = x0
    dY  = (1/gamma) b2(X,Y)dt + (1/sqrt(gamma)) sigma2(X,Y) dW2,   Y_0 = y0
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
from django.conf import settings

from apps.expr.fields import CoeffField
from apps.monotone.operators import MonotoneOp

from .exceptions import InvalidConfigError, InvalidScaleError, InvalidSystemError


@dataclass(frozen=True, eq=False)
class SystemSpec:
    n: int
    m: int
    d1: int
    d2: int
    b1: CoeffField
    sigma1: CoeffField
    b2: CoeffField
    sigma2: CoeffField
    A: MonotoneOp
    x0: np.ndarray
    y0: np.ndarray
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'x0', np.atleast_1d(np.asarray(self.x0, dtype=float)))
        object.__setattr__(self, 'y0', np.atleast_1d(np.asarray(self.y0, dtype=float)))
        expected = {
            'b1': (self.b1, (self.n,)),
            'sigma1': (self.sigma1, (self.n, self.d1)),
            'b2': (self.b2, (self.m,)),
            'sigma2': (self.sigma2, (self.m, self.d2)),
        }
        for name, (coeff, shape) in expected.items():
            if coeff.shape != shape:
                raise InvalidSystemError(f"{name} has shape {coeff.shape}, expected {shape}")
            if coeff.dims != (self.n, self.m):
                raise InvalidSystemError(f"{name} declared for dims {coeff.dims}, system is {(self.n, self.m)}")
        if self.x0.shape != (self.n,) or self.y0.shape != (self.m,):
            raise InvalidSystemError("x0/y0 do not match the declared dimensions")
        if self.A.n != self.n:
            raise InvalidSystemError(f"operator acts on R^{self.A.n}, slow variable lives in R^{self.n}")
        tol = settings.MVLDP['DOMAIN_TOL']
        dist = float(np.linalg.norm(self.A.project(self.x0) - self.x0))
        if dist > tol:
            raise InvalidSystemError(f"x0={self.x0.tolist()} lies {dist:.3e} outside the closure of D(A)")

    @classmethod
    def from_sources(cls, dims, b1, sigma1, b2, sigma2, A, x0, y0, params=None, noise_dims=None):
        """
        Build a system from expression sources. Noise dimensions default to
        the column counts of sigma1 / sigma2.
        """
        n, m = dims
        params = dict(params or {})
        b1 = CoeffField.parse(b1, dims, params, shape=(n,))
        b2 = CoeffField.parse(b2, dims, params, shape=(m,))
        d1, d2 = noise_dims or (_columns(sigma1), _columns(sigma2))
        sigma1 = CoeffField.parse(sigma1, dims, params, shape=(n, d1))
        sigma2 = CoeffField.parse(sigma2, dims, params, shape=(m, d2))
        return cls(n=n, m=m, d1=d1, d2=d2, b1=b1, sigma1=sigma1, b2=b2, sigma2=sigma2,
                   A=A, x0=x0, y0=y0, params=params)

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def x_dependent_fast(self):
        return self.b2.uses_x or self.sigma2.uses_x

    @property
    def x_dependent_slow(self):
        return self.b1.uses_x or self.sigma1.uses_x


def _columns(source):
    if isinstance(source, str):
        return 1
    first = source[0]
    return 1 if isinstance(first, str) else len(first)


@dataclass(frozen=True)
class ScaleParams:
    epsilon: float
    gamma: float

    def __post_init__(self):
        for name in ('epsilon', 'gamma'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidScaleError(f"{name}={value} must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    seed: int = 0
    path_count: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidConfigError("dt must be positive")
        if self.dt > self.horizon * (1 + 1e-12):
            raise InvalidConfigError(f"dt={self.dt} exceeds the horizon {self.horizon}")
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise InvalidConfigError(f"dt={self.dt} does not divide the horizon {self.horizon}")
        if self.path_count < 1:
            raise InvalidConfigError("path_count must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfigError("seed must be a 64-bit unsigned integer")

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    @property
    def times(self):
        return np.arange(self.steps + 1) * self.dt

    def with_horizon(self, horizon):
        """Same horizon exactly; dt shrinks to horizon/ceil(horizon/dt) when it does not divide it."""
        steps = max(1, int(math.ceil(horizon / self.dt - 1e-9)))
        dt = self.dt if abs(steps * self.dt - horizon) <= 1e-9 * horizon else horizon / steps
        return replace(self, dt=dt, horizon=horizon)

    def replace(self, **changes):
        return replace(self, **changes)
