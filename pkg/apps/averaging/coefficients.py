"""
Averaged slow coefficients b1_bar(x), a1_bar(x) and the symmetric square
root sigma1_bar(x) of a1_bar(x).
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from apps.simulate.parallel import ordered_map

from .estimates import Estimate
from .exceptions import AsymmetricMatrixError, AveragingError, NotPositiveSemidefiniteError
from .invariant import AveragingConfig, estimate_invariant

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def sqrt_psd(a):
    """Symmetric PSD square root through the spectral decomposition."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise AsymmetricMatrixError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise AsymmetricMatrixError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    eigenvalues, vectors = np.linalg.eigh(a)
    if eigenvalues.size and eigenvalues[0] < -PSD_TOL:
        raise NotPositiveSemidefiniteError(float(eigenvalues[0]), PSD_TOL)
    root = (vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ vectors.T
    return 0.5 * (root + root.T)


def _x_column(x):
    return np.atleast_1d(np.asarray(x, dtype=float))[:, None]


def _measure(spec, x, cfg, measure):
    return measure if measure is not None else estimate_invariant(spec, x, cfg)


def averaged_drift(spec, x, cfg=None, measure=None):
    cfg = cfg or AveragingConfig()
    if not spec.b1.uses_y:
        return Estimate.exact(spec.b1(_x_column(x), spec.y0[:, None])[:, 0])
    measure = _measure(spec, x, cfg, measure)
    return measure.expect(lambda y: spec.b1(_x_column(x), y), cfg.batches)


def _outer(sigma):
    return np.einsum('ik...,jk...->ij...', sigma, sigma)


def averaged_diffusion(spec, x, cfg=None, measure=None):
    cfg = cfg or AveragingConfig()
    if not spec.sigma1.uses_y:
        sigma = spec.sigma1(_x_column(x), spec.y0[:, None])
        return Estimate.exact(_outer(sigma)[:, :, 0])
    measure = _measure(spec, x, cfg, measure)
    estimate = measure.expect(lambda y: _outer(spec.sigma1(_x_column(x), y)), cfg.batches)
    value = 0.5 * (estimate.value + estimate.value.T)
    stderr = 0.5 * (estimate.stderr + estimate.stderr.T)
    smallest = float(np.linalg.eigvalsh(value)[0])
    if smallest < -PSD_TOL:
        raise NotPositiveSemidefiniteError(smallest, PSD_TOL)
    return Estimate(value=value, stderr=stderr, n_samples=estimate.n_samples)


@dataclass
class AveragedPoint:
    x: np.ndarray
    b_bar: Estimate
    a_bar: Estimate
    sigma_bar: np.ndarray

    def row(self):
        """x..., bbar..., abar..., sigbar..., stderr(bbar)..., stderr(abar)..."""
        return [
            *self.x, *self.b_bar.value.ravel(), *self.a_bar.value.ravel(), *self.sigma_bar.ravel(),
            *self.b_bar.stderr.ravel(), *self.a_bar.stderr.ravel(),
        ]

    def to_json(self):
        return {
            'x': self.x.tolist(),
            'b_bar': self.b_bar.to_json(),
            'a_bar': self.a_bar.to_json(),
            'sigma_bar': self.sigma_bar.tolist(),
        }


def averaged_coefficients(spec, x, cfg=None):
    """b1_bar, a1_bar and sigma1_bar at x from one set of frozen chains."""
    cfg = cfg or AveragingConfig()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    measure = None
    if spec.b1.uses_y or spec.sigma1.uses_y:
        measure = estimate_invariant(spec, x, cfg)
    b_bar = averaged_drift(spec, x, cfg, measure)
    a_bar = averaged_diffusion(spec, x, cfg, measure)
    return AveragedPoint(x=x, b_bar=b_bar, a_bar=a_bar, sigma_bar=sqrt_psd(a_bar.value))


def averaged_header(n):
    fields = ['x', 'bbar', 'abar', 'sigbar', 'stderr_bbar', 'stderr_abar']
    sizes = [n, n, n * n, n * n, n, n * n]
    return [f'{name}{i}' for name, size in zip(fields, sizes) for i in range(size)]


class AveragedCoeffs:
    """
    Evaluation map x -> (b1_bar(x), a1_bar(x), sigma1_bar(x)).

    Methods accept a single point (n,) or a batch (n, B); batched results
    carry the batch on the trailing axis.
    """

    def __init__(self, n, drift_fn, diffusion_fn, points=()):
        self.n = n
        self._drift = drift_fn
        self._diffusion = diffusion_fn
        self.points = list(points)

    @classmethod
    def constant(cls, b_bar, a_bar, points=()):
        b_bar = np.atleast_1d(np.asarray(b_bar, dtype=float))
        a_bar = np.atleast_2d(np.asarray(a_bar, dtype=float))
        return cls(
            b_bar.shape[0],
            lambda x: np.broadcast_to(b_bar[:, None], (b_bar.shape[0], x.shape[1])),
            lambda x: np.broadcast_to(a_bar[:, :, None], a_bar.shape + (x.shape[1],)),
            points,
        )

    @classmethod
    def interpolated(cls, points):
        """Shape-preserving interpolation in x of averaged points on a 1D grid, clamped at the ends."""
        points = sorted(points, key=lambda p: float(p.x[0]))
        grid = np.array([float(p.x[0]) for p in points])
        if points[0].x.shape[0] != 1:
            raise AveragingError("interpolated averaged coefficients need n == 1")
        if len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise AveragingError("x grid must hold at least two distinct points")
        drift = PchipInterpolator(grid, np.array([p.b_bar.value[0] for p in points]))
        diffusion = PchipInterpolator(grid, np.array([p.a_bar.value[0, 0] for p in points]))

        def clamp(x):
            return np.clip(x[0], grid[0], grid[-1])

        return cls(
            1,
            lambda x: drift(clamp(x))[None, :],
            lambda x: np.maximum(diffusion(clamp(x)), 0.0)[None, None, :],
            points,
        )

    @classmethod
    def from_callables(cls, n, drift, diffusion):
        """Wrap exact maps drift(x) -> (n, B) and diffusion(x) -> (n, n, B)."""
        return cls(n, drift, diffusion)

    def _batch(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        single = x.ndim == 1
        return (x[:, None] if single else x), single

    def drift(self, x):
        x, single = self._batch(x)
        out = np.asarray(self._drift(x), dtype=float)
        return out[:, 0] if single else out

    def diffusion(self, x):
        x, single = self._batch(x)
        out = np.asarray(self._diffusion(x), dtype=float)
        return out[:, :, 0] if single else out

    def sigma(self, x):
        x, single = self._batch(x)
        a = np.asarray(self._diffusion(x), dtype=float)
        if self.n == 1:
            root = np.sqrt(np.clip(a, 0.0, None))
        else:
            root = np.stack([sqrt_psd(a[:, :, b]) for b in range(a.shape[2])], axis=2)
        return root[:, :, 0] if single else root


def build_averaged(spec, cfg=None, x_grid=None, threads=None):
    """
    Averaged coefficients of `spec`: a constant map when neither the slow
    coefficients nor the fast dynamics depend on x, otherwise an interpolant
    over x_grid (n == 1) of pointwise estimates computed in parallel.
    """
    cfg = cfg or AveragingConfig()
    if not (spec.x_dependent_slow or spec.x_dependent_fast):
        point = averaged_coefficients(spec, spec.x0, cfg)
        logger.info("averaged coefficients constant b_bar=%s a_bar=%s",
                    point.b_bar.value.tolist(), point.a_bar.value.tolist())
        return AveragedCoeffs.constant(point.b_bar.value, point.a_bar.value, [point])
    if x_grid is None:
        raise AveragingError("x-dependent coefficients need an x grid to interpolate over")
    if spec.n != 1:
        raise AveragingError("x-dependent averaged coefficients are interpolated for n == 1 only")
    grid = np.asarray(x_grid, dtype=float).ravel()
    points = ordered_map(lambda x: averaged_coefficients(spec, [x], cfg), list(grid), threads)
    logger.info("averaged coefficients interpolated over %d points", len(points))
    return AveragedCoeffs.interpolated(points)
