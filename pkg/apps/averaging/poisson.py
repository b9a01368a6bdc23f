"""
Cell-problem corrector

    kappa(x, y, p) = int_0^inf E[Psi(x, Y_t^y, p) - Psi_bar(x, p)] dt,
    Psi(x, y, p) = <b1(x,y), p> - 1/2 <sigma1 sigma1^T(x,y) p, p>,

estimated with common random numbers across the y grid, plus the probes
that check its generator residual and growth bound, the Lipschitz
property of the averaged coefficients and the invariant second moment.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from apps.simulate.scheme import run_frozen
from apps.simulate.system import SimConfig
from apps.simulate.verifiers import verify_dissipativity

from .coefficients import averaged_coefficients
from .estimates import Estimate
from .exceptions import AveragingError, MixingRateError
from .invariant import AveragingConfig, estimate_invariant

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KappaConfig:
    t_max: float = None      # None: 2 ln(C/tol) / alpha_hat
    dt: float = 0.01
    n_paths: int = 200
    tol: float = 1e-3
    C: float = 1.0
    seed: int = 0

    def replace(self, **changes):
        return replace(self, **changes)


def psi(spec, x, y, p):
    """Psi(x, y, p) for a batch y of shape (m, B)."""
    x_col = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    p = np.atleast_1d(np.asarray(p, dtype=float))
    drift = np.einsum('i...,i->...', spec.b1(x_col, y), p)
    spread = np.einsum('ik...,i->k...', spec.sigma1(x_col, y), p)
    return drift - 0.5 * np.sum(spread ** 2, axis=0)


def psi_bar(avg, x, p):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return float(avg.drift(x) @ p - 0.5 * p @ avg.diffusion(x) @ p)


def truncation_time(spec, cfg):
    if cfg.t_max is not None:
        return cfg.t_max
    alpha_hat = verify_dissipativity(spec, 1000, cfg.seed).alpha_hat
    if not alpha_hat > 0:
        raise MixingRateError(alpha_hat)
    return 2.0 * math.log(cfg.C / cfg.tol) / alpha_hat


def _grid(y, m):
    y = np.asarray(y, dtype=float)
    if m == 1 and y.ndim <= 1:
        y = y.reshape(1, -1)
    elif y.ndim == 1:
        y = y[:, None]
    return y


def kappa(spec, x, y, p, avg, cfg=None):
    """
    Estimate kappa at every column of y ((m,) for one point, (m, G) or a
    1D array when m == 1). Path j starts from each grid point with the same
    noise stream j.
    """
    cfg = cfg or KappaConfig()
    grid = _grid(y, spec.m)
    points = grid.shape[1]
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if not np.any(p) or not (spec.b1.uses_y or spec.sigma1.uses_y):
        return Estimate.exact(np.zeros(points))
    t_max = truncation_time(spec, cfg)
    steps = max(1, int(math.ceil(t_max / cfg.dt - 1e-9)))
    sim = SimConfig(dt=cfg.dt, horizon=steps * cfg.dt, seed=cfg.seed)
    centre = psi_bar(avg, x, p)
    y_init = np.repeat(grid, cfg.n_paths, axis=1)
    streams = np.tile(np.arange(cfg.n_paths), points)
    integral = np.zeros(y_init.shape[1])

    def accumulate(k, state):
        if k < steps:
            integral[:] += (psi(spec, x, state, p) - centre) * cfg.dt

    logger.debug("kappa x=%s p=%s points=%d paths=%d t_max=%.3g", np.atleast_1d(x).tolist(),
                 p.tolist(), points, cfg.n_paths, t_max)
    run_frozen(spec, x, y_init, sim, streams=streams, sample_every=steps, observer=accumulate)
    per_path = integral.reshape(points, cfg.n_paths)
    stderr = per_path.std(axis=1, ddof=1) / np.sqrt(cfg.n_paths) if cfg.n_paths > 1 else np.zeros(points)
    return Estimate(value=per_path.mean(axis=1), stderr=stderr, n_samples=cfg.n_paths)


@dataclass
class PoissonReport:
    max_residual: float
    bound: float
    passed: bool
    y: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    kappa: Estimate = field(repr=False)


def poisson_residual(spec, avg, x, p, y_grid, cfg=None, h=1e-3):
    """
    |L_1^x kappa_hat + Psi - Psi_bar| at the interior grid points, with the
    generator applied by central differences to a cubic spline of kappa_hat.
    """
    if spec.m != 1:
        raise AveragingError("the generator residual is checked for m == 1")
    cfg = cfg or KappaConfig()
    y_grid = np.sort(np.asarray(y_grid, dtype=float).ravel())
    estimate = kappa(spec, x, y_grid, p, avg, cfg)
    spline = CubicSpline(y_grid, estimate.value)
    y = y_grid[1:-1]
    first = (spline(y + h) - spline(y - h)) / (2.0 * h)
    second = (spline(y + h) - 2.0 * spline(y) + spline(y - h)) / h ** 2
    x_col = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    b2 = spec.b2(x_col, y[None, :])[0]
    s2 = spec.sigma2(x_col, y[None, :])[0]
    generator = b2 * first + 0.5 * np.sum(s2 ** 2, axis=0) * second
    residual = np.abs(generator + psi(spec, x, y[None, :], p) - psi_bar(avg, x, p))
    p_norm = float(np.linalg.norm(np.atleast_1d(p)))
    bound = 0.05 * (1.0 + p_norm ** 2)
    worst = float(residual.max()) if residual.size else 0.0
    report = PoissonReport(max_residual=worst, bound=bound, passed=worst <= bound,
                           y=y, residual=residual, kappa=estimate)
    if not report.passed:
        logger.warning("poisson residual %.4g above bound %.4g at p=%s", worst, bound, p)
    return report


@dataclass
class KappaBoundReport:
    C_hat: float
    max_ratio_coarse: float
    max_ratio_fine: float
    passed: bool


def _kappa_ratios(spec, avg, xs, ps, y_grid, cfg):
    grid = _grid(y_grid, spec.m)
    ratios = []
    for x in xs:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        for p in ps:
            p = np.atleast_1d(np.asarray(p, dtype=float))
            p_norm = float(np.linalg.norm(p))
            if p_norm == 0:
                continue
            value = np.abs(kappa(spec, x, grid, p, avg, cfg).value)
            scale = (p_norm + p_norm ** 2) * (1.0 + np.linalg.norm(x) + np.linalg.norm(grid, axis=0))
            ratios.append(value / scale)
    return np.concatenate(ratios) if ratios else np.zeros(0)


def fit_kappa_bound(spec, avg, points_coarse, points_fine, cfg=None, xs=None, ps=(0.5, 1.0), safety=2.0):
    """
    Fit C_hat = safety * max |kappa|/((|p|+|p|^2)(1+|x|+|y|)) on the coarse
    y grid, then check the same bound on the fine grid.
    """
    cfg = cfg or KappaConfig()
    xs = [spec.x0] if xs is None else xs
    coarse = _kappa_ratios(spec, avg, xs, ps, points_coarse, cfg)
    fine = _kappa_ratios(spec, avg, xs, ps, points_fine, cfg)
    max_coarse = float(coarse.max(initial=0.0))
    max_fine = float(fine.max(initial=0.0))
    C_hat = safety * max_coarse
    return KappaBoundReport(C_hat=C_hat, max_ratio_coarse=max_coarse, max_ratio_fine=max_fine,
                            passed=max_fine <= C_hat or max_fine == 0.0)


@dataclass
class LipschitzReport:
    C_hat: float
    ratios: list
    errors: list


def lipschitz_probe(spec, x_pairs, cfg=None):
    """max over pairs of (|b_bar(x1)-b_bar(x2)| + |a_bar(x1)-a_bar(x2)|_F) / |x1-x2| with MC error bars."""
    cfg = cfg or AveragingConfig()
    ratios, errors = [], []
    for x1, x2 in x_pairs:
        x1 = np.atleast_1d(np.asarray(x1, dtype=float))
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        gap = float(np.linalg.norm(x1 - x2))
        if gap == 0:
            raise ValueError("Lipschitz pairs must be distinct points")
        one, two = averaged_coefficients(spec, x1, cfg), averaged_coefficients(spec, x2, cfg)
        diff = (np.linalg.norm(one.b_bar.value - two.b_bar.value)
                + np.linalg.norm(one.a_bar.value - two.a_bar.value))
        noise = np.sqrt(np.sum(one.b_bar.stderr ** 2 + two.b_bar.stderr ** 2)
                        + np.sum(one.a_bar.stderr ** 2 + two.a_bar.stderr ** 2))
        ratios.append(float(diff / gap))
        errors.append(float(noise / gap))
    C_hat = max(ratios) if ratios else 0.0
    return LipschitzReport(C_hat=C_hat, ratios=ratios, errors=errors)


@dataclass
class SecondMomentReport:
    C_hat: float
    ratios: list
    moments: list


def second_moment_bound(spec, x_points, cfg=None):
    """Fit C in E_mu^x |Y|^2 <= C (1 + |x|^2) over x_points."""
    cfg = cfg or AveragingConfig()
    ratios, moments = [], []
    for x in x_points:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        moment = estimate_invariant(spec, x, cfg).second_moment
        moments.append(moment)
        ratios.append(moment / (1.0 + float(x @ x)))
    return SecondMomentReport(C_hat=max(ratios, default=0.0), ratios=ratios, moments=moments)
