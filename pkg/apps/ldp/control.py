"""
Piecewise-constant controls and the controlled averaged inclusion

    dX^z in -A(X^z)dt + b1_bar(X^z)dt + sigma1_bar(X^z) z(t)dt.
"""
from dataclasses import dataclass

import numpy as np


@dataclass
class ControlGrid:
    t: float
    z: np.ndarray     # (N, n): z[k] acts on [k dt, (k+1) dt)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim == 1:
            self.z = self.z[:, None]
        if not self.t > 0:
            raise ValueError("horizon t must be positive")
        if self.z.shape[0] < 1:
            raise ValueError("a control grid needs at least one step")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("controls must be finite")

    @classmethod
    def zeros(cls, t, N, n):
        return cls(t=t, z=np.zeros((N, n)))

    @classmethod
    def constant(cls, t, N, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(t=t, z=np.tile(value, (N, 1)))

    @property
    def N(self):
        return self.z.shape[0]

    @property
    def n(self):
        return self.z.shape[1]

    @property
    def dt(self):
        return self.t / self.N

    def refined(self):
        """Same control on a grid with twice as many steps."""
        return ControlGrid(t=self.t, z=np.repeat(self.z, 2, axis=0))

    def to_json(self):
        return self.z.tolist()


def action(z: ControlGrid):
    """1/2 sum |z_k|^2 dt."""
    return 0.5 * float(np.sum(z.z ** 2)) * z.dt


@dataclass
class ControlledPath:
    times: np.ndarray
    X: np.ndarray      # (N+1, n)
    dK: np.ndarray     # (N, n)

    @property
    def terminal(self):
        return self.X[-1]


def controlled_terminals(avg, A, x0, controls, dt):
    """
    Terminal states for a batch of controls with shape (P, N, n); returns (n, P).
    Step: X_{k+1} = J_dt(X_k + (b1_bar(X_k) + sigma1_bar(X_k) z_k) dt).
    """
    controls = np.asarray(controls, dtype=float)
    P, N, _ = controls.shape
    x = np.repeat(np.atleast_1d(np.asarray(x0, dtype=float))[:, None], P, axis=1)
    for k in range(N):
        push = np.einsum('ijp,pj->ip', avg.sigma(x), controls[:, k, :])
        x = A.resolvent(dt, x + (avg.drift(x) + push) * dt)
    return x


def integrate_controlled(avg, A, x0, z: ControlGrid):
    """Resolvent-splitting Euler for one control; returns (terminal state, ControlledPath)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    A.check_domain(x0[:, None])
    dt = z.dt
    xs = np.empty((z.N + 1, x0.shape[0]))
    dks = np.empty((z.N, x0.shape[0]))
    xs[0] = x0
    x = x0[:, None]
    for k in range(z.N):
        pre = x + (avg.drift(x) + np.einsum('ijp,jp->ip', avg.sigma(x), z.z[k][:, None])) * dt
        x = A.resolvent(dt, pre)
        xs[k + 1], dks[k] = x[:, 0], (pre - x)[:, 0]
    path = ControlledPath(times=np.arange(z.N + 1) * dt, X=xs, dK=dks)
    return path.terminal, path
