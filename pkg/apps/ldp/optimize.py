"""
Rate function and variational value by discretised optimal control.

    I(x; x0, t) = inf { 1/2 int_0^t |z|^2 ds : X^z_{x0}(t) = x }
    u0^h(t, x0) = inf { 1/2 int_0^t |z|^2 ds + h(X^z_{x0}(t)) }

Controls are piecewise constant on N steps. The terminal constraint is
enforced by quadratic penalties mu/2 |X^z(t) - x|^2 with mu raised tenfold
per level; each level runs Barzilai-Borwein gradient descent with an
Armijo backtracking safeguard on central-difference gradients.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from apps.expr.fields import CoeffField
from apps.simulate.parallel import ordered_map

from .control import ControlGrid, action, controlled_terminals, integrate_controlled
from .exceptions import InvalidTestFunctionError, TargetOutsideDomainError, UnreachableTargetError

logger = logging.getLogger(__name__)


class TestFunction:
    """A bounded scalar test function h(x) of the slow variable only."""

    __test__ = False

    def __init__(self, coeff: CoeffField):
        if coeff.shape != ():
            raise InvalidTestFunctionError(f"h must be scalar, got shape {coeff.shape}")
        if coeff.uses_y:
            raise InvalidTestFunctionError("h may depend on x only")
        self.coeff = coeff
        self.n = coeff.dims[0]

    @classmethod
    def parse(cls, source, n, params=None):
        return cls(CoeffField.parse(source, (n, 0), params, shape=()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self.coeff(x[:, None], None)[0])
        return self.coeff(x, None)

    def bound(self, A, radius=10.0, count=4096, seed=0):
        """sup |h| over points sampled in the domain closure within `radius` of the origin."""
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        points = A.project(radius * rng.uniform(-1.0, 1.0, (self.n, count)))
        value = float(np.max(np.abs(self(points))))
        if not np.isfinite(value):
            raise InvalidTestFunctionError("h is unbounded on the sampled region")
        return value

    def to_source(self):
        return self.coeff.to_source()


@dataclass(frozen=True)
class OptimizerConfig:
    N: int = 32
    tol_gap: float = 1e-4
    mu_start: float = 1.0
    mu_factor: float = 10.0
    mu_max: float = 1e8
    max_iter: int = 300
    grad_tol: float = 1e-10
    stability: float = 1e-4
    refine: bool = False
    restarts: int = 4            # straight-line starts of variational_value
    candidates: int = 64
    search_radius: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.mu_factor <= 1 or self.mu_start <= 0:
            raise ValueError("penalty schedule must start positive and grow")

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class RateResult:
    value: float
    optimal_control: ControlGrid
    terminal_gap: float
    converged: bool
    penalty_final: float
    restart_values: list = field(default_factory=list)
    nonunique: bool = False
    refined_value: float = None
    discretization_ok: bool = None

    def to_json(self):
        return {
            'value': self.value,
            'terminal_gap': self.terminal_gap,
            'converged': self.converged,
            'penalty_final': self.penalty_final,
            'restart_values': self.restart_values,
            'nonunique': self.nonunique,
            'refined_value': self.refined_value,
            'discretization_ok': self.discretization_ok,
            'control': self.optimal_control.to_json(),
        }


@dataclass
class VariationalResult:
    value: float
    optimal_control: ControlGrid
    terminal: np.ndarray
    restart_values: list = field(default_factory=list)
    nonunique: bool = False


def _steps(z):
    return 1e-5 * (1.0 + np.abs(z))


def _value(avg, A, x0, dt, z, terminal_cost):
    terminal = controlled_terminals(avg, A, x0, z[None], dt)
    return 0.5 * float(np.sum(z ** 2)) * dt + float(terminal_cost(terminal)[0])


def _value_and_grad(avg, A, x0, dt, z, terminal_cost):
    """Objective and gradient; the terminal part is differentiated by central differences."""
    size = z.size
    h = _steps(z).ravel()
    batch = np.repeat(z[None], 2 * size + 1, axis=0).reshape(2 * size + 1, size)
    idx = np.arange(size)
    batch[1 + idx, idx] += h
    batch[1 + size + idx, idx] -= h
    costs = terminal_cost(controlled_terminals(avg, A, x0, batch.reshape((-1,) + z.shape), dt))
    grad = ((costs[1:size + 1] - costs[size + 1:]) / (2.0 * h)).reshape(z.shape) + dt * z
    return 0.5 * float(np.sum(z ** 2)) * dt + float(costs[0]), grad


def _descend(avg, A, x0, dt, z, terminal_cost, cfg):
    f, g = _value_and_grad(avg, A, x0, dt, z, terminal_cost)
    step = 1.0 / max(1.0, float(np.linalg.norm(g)))
    for _ in range(cfg.max_iter):
        g_sq = float(np.sum(g ** 2))
        if np.sqrt(g_sq) <= cfg.grad_tol:
            break
        while True:
            trial = z - step * g
            f_trial = _value(avg, A, x0, dt, trial, terminal_cost)
            if f_trial <= f - 1e-4 * step * g_sq:
                break
            step *= 0.5
            if step < 1e-16:
                return z, f
        f_new, g_new = _value_and_grad(avg, A, x0, dt, trial, terminal_cost)
        dz, dg = trial - z, g_new - g
        curvature = float(np.sum(dz * dg))
        step = float(np.sum(dz * dz)) / curvature if curvature > 0 else 2.0 * step
        decrease = f - f_new
        z, f, g = trial, f_new, g_new
        if decrease <= 1e-15 * max(1.0, abs(f)):
            break
    return z, f


@dataclass
class _Attempt:
    z: np.ndarray
    value: float
    gap: float
    converged: bool
    mu: float


def _continuation(avg, A, x0, target, t, z0, cfg):
    dt = t / z0.shape[0]
    z, mu, previous = z0.copy(), cfg.mu_start, None
    while True:
        def cost(terminal, mu=mu):
            return 0.5 * mu * np.sum((terminal - target[:, None]) ** 2, axis=0)

        z, _ = _descend(avg, A, x0, dt, z, cost, cfg)
        terminal = controlled_terminals(avg, A, x0, z[None], dt)[:, 0]
        gap = float(np.linalg.norm(terminal - target))
        value = action(ControlGrid(t=t, z=z))
        stable = previous is not None and abs(value - previous) <= cfg.stability * max(value, 1e-12)
        logger.debug("penalty level mu=%.0e value=%.6g gap=%.3e", mu, value, gap)
        if gap <= cfg.tol_gap and stable:
            return _Attempt(z, value, gap, True, mu)
        if mu >= cfg.mu_max:
            return _Attempt(z, value, gap, False, mu)
        previous, mu = value, mu * cfg.mu_factor


def _pick(attempts, label):
    converged = [a for a in attempts if a.converged]
    pool = converged or attempts
    best = min(pool, key=(lambda a: a.value) if converged else (lambda a: (a.gap, a.value)))
    values = [a.value for a in converged]
    nonunique = len(values) > 1 and (max(values) - min(values)) > 0.01 * max(min(values), 1e-12)
    if nonunique:
        logger.warning("%s restarts disagree values=%s, possible nonuniqueness", label, values)
    return best, nonunique


def _straight_line(avg, x0, target, t, N):
    sigma = np.atleast_2d(avg.sigma(x0))
    direction = np.linalg.pinv(sigma) @ (target - x0) / t
    return np.tile(direction, (N, 1))


def _solve_rate(avg, A, x0, target, t, N, cfg, warm=(), threads=None):
    zero = ControlGrid.zeros(t, N, x0.shape[0])
    free, path = integrate_controlled(avg, A, x0, zero)
    free_gap = float(np.linalg.norm(free - target))
    if free_gap <= cfg.tol_gap:
        return RateResult(value=0.0, optimal_control=zero, terminal_gap=free_gap, converged=True,
                          penalty_final=0.0, restart_values=[0.0])
    if not np.any(avg.sigma(path.X.T)):
        raise UnreachableTargetError(target.tolist(), free.tolist())
    starts = [zero.z, _straight_line(avg, x0, target, t, N), *warm]
    attempts = ordered_map(lambda z0: _continuation(avg, A, x0, target, t, z0, cfg), starts, threads)
    best, nonunique = _pick(attempts, 'rate')
    return RateResult(
        value=best.value, optimal_control=ControlGrid(t=t, z=best.z), terminal_gap=best.gap,
        converged=best.converged, penalty_final=best.mu,
        restart_values=[a.value for a in attempts], nonunique=nonunique,
    )


def rate(avg, A, x0, x_target, t, cfg=None, threads=None):
    """I(x_target; x0, t) for the averaged constrained dynamics."""
    cfg = cfg or OptimizerConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    target = np.atleast_1d(np.asarray(x_target, dtype=float))
    A.check_domain(x0[:, None])
    distance = float(A.distance(target[:, None])[0])
    if distance > 1e-9:
        raise TargetOutsideDomainError(target.tolist(), distance)
    result = _solve_rate(avg, A, x0, target, t, cfg.N, cfg, threads=threads)
    if cfg.refine and result.value > 0:
        finer = _solve_rate(avg, A, x0, target, t, 2 * cfg.N, cfg,
                            warm=[result.optimal_control.refined().z], threads=threads)
        change = abs(finer.value - result.value) / max(result.value, 1e-12)
        result.refined_value = finer.value
        result.discretization_ok = change < 0.02
        if not result.discretization_ok:
            logger.warning("rate changed by %.2f%% when doubling N=%d", 100 * change, cfg.N)
    if not result.converged:
        logger.warning("rate did not converge target=%s gap=%.3e", target.tolist(), result.terminal_gap)
    logger.info("rate x0=%s target=%s t=%g value=%.6g converged=%s",
                x0.tolist(), target.tolist(), t, result.value, result.converged)
    return result


def _candidate_starts(avg, A, x0, t, h, cfg):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    points = A.project(x0[:, None] + cfg.search_radius * rng.standard_normal((x0.shape[0], cfg.candidates)))
    pinv = np.linalg.pinv(np.atleast_2d(avg.sigma(x0)))
    reach = 0.5 * np.sum((pinv @ (points - x0[:, None])) ** 2, axis=0) / t
    order = np.argsort(h(points) + reach, kind='stable')[: cfg.restarts]
    return [_straight_line(avg, x0, points[:, k], t, cfg.N) for k in order]


def variational_value(avg, A, x0, t, h: TestFunction, cfg=None, threads=None):
    """u0^h(t, x0): minimise action plus h at the terminal state."""
    cfg = cfg or OptimizerConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    A.check_domain(x0[:, None])
    dt = t / cfg.N

    def cost(terminal):
        return np.atleast_1d(h(terminal))

    starts = [np.zeros((cfg.N, x0.shape[0]))] + _candidate_starts(avg, A, x0, t, h, cfg)
    runs = ordered_map(lambda z0: _descend(avg, A, x0, dt, z0, cost, cfg), starts, threads)
    values = [f for _, f in runs]
    terminals = controlled_terminals(avg, A, x0, np.stack([z for z, _ in runs]), dt)
    k = int(np.argmin(values))
    best_z, terminal = runs[k][0], terminals[:, k]
    # distinct minimisers reaching the same value
    ties = [j for j, v in enumerate(values) if v - values[k] <= 0.01 * max(abs(values[k]), 1e-12)]
    nonunique = any(np.linalg.norm(terminals[:, j] - terminal) > 1e-2 * (1.0 + np.linalg.norm(terminal)) for j in ties)
    if nonunique:
        logger.warning("variational restarts reach %s with distinct terminals, possible nonuniqueness", values[k])
    return VariationalResult(value=float(values[k]), optimal_control=ControlGrid(t=t, z=best_z),
                             terminal=terminal, restart_values=values, nonunique=nonunique)
