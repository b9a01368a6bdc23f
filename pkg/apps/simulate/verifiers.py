"""
Runtime checks of the standing assumptions on a simulated system:
discrete variational inequality, interior estimate, dissipativity of the
fast coefficients, Lyapunov condition, slow-coefficient growth.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from apps.monotone.exceptions import UnsupportedOperatorError
from apps.monotone.operators import NormalConeBall, NormalConeBox, Zero, check_operator_assumption

from .exceptions import NotInteriorError

logger = logging.getLogger(__name__)

__all__ = [
    'check_operator_assumption',
    'verify_discrete_vi',
    'verify_interior_estimate',
    'verify_dissipativity',
    'verify_lyapunov',
    'verify_slow_coefficients',
]


@dataclass
class ViReport:
    max_violation: float
    tolerance: float
    passed: bool
    worst_step: int = -1


@dataclass
class InteriorReport:
    lhs: float
    rhs: float
    margin: float
    passed: bool


@dataclass
class DissipativityReport:
    beta_hat: float
    L_hat: float
    alpha_hat: float
    violations: int
    passed: bool


@dataclass
class LyapunovReport:
    max_violation: float
    worst_point: list
    checked: int
    excluded: int
    kinks: list = field(default_factory=list)
    passed: bool = False


@dataclass
class SlowCoefficientReport:
    L_hat: float
    lipschitz_hat: float
    sup_b1_sq: float
    sup_sigma1_sq: float
    passed: bool


def verify_discrete_vi(path, op, samples, chunk=256):
    """
    max over steps k and graph pairs (x, y) of -<X_{k+1} - x, dK_k - y dt_k>.
    dK_k is the resolvent correction that produced X_{k+1}.
    """
    xs = np.stack([np.atleast_1d(x) for x, _ in samples])     # (S, n)
    ys = np.stack([np.atleast_1d(y) for _, y in samples])
    dt = np.diff(path.times)
    post = path.X[1:]
    worst, worst_step = 0.0, -1
    for start in range(0, len(dt), chunk):
        stop = min(start + chunk, len(dt))
        gap = post[start:stop, None, :] - xs[None]                          # (c, S, n)
        push = path.dK[start:stop, None, :] - ys[None] * dt[start:stop, None, None]
        violation = -np.einsum('csn,csn->cs', gap, push)
        k = int(np.argmax(violation.max(axis=1)))
        if violation[k].max() > worst:
            worst, worst_step = float(violation[k].max()), start + k
    scale = float(np.max(np.abs(path.dK))) if path.dK.size else 0.0
    tolerance = 1e-8 * (1.0 + scale)
    report = ViReport(max_violation=worst, tolerance=tolerance, passed=worst <= tolerance, worst_step=worst_step)
    if not report.passed:
        logger.warning("discrete VI violated max=%.3e step=%d", worst, worst_step)
    return report


def verify_interior_estimate(path, op, a, tol=None):
    """
    For normal cones: sum <X_{k+1} - a, dK_k> >= dist(a, boundary) * sum |dK_k|.
    """
    if not isinstance(op, (NormalConeBox, NormalConeBall, Zero)):
        raise UnsupportedOperatorError(f"interior estimate is checked for normal cones only, got {op!r}")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    margin = op.interior_margin(a)
    if not margin > 0:
        raise NotInteriorError(a.tolist(), margin)
    lhs = float(np.einsum('kn,kn->', path.X[1:] - a, path.dK))
    tv = path.total_variation
    rhs = margin * tv if tv > 0 else 0.0
    tol = 1e-8 * (1.0 + tv) if tol is None else tol
    return InteriorReport(lhs=lhs, rhs=float(rhs), margin=float(margin), passed=lhs >= rhs - tol)


def _sample_slow_states(op, rng, count, radius):
    x = radius * rng.standard_normal((op.n, count))
    return op.project(x)


def _frobenius_sq(diff):
    return np.sum(diff.reshape(-1, diff.shape[-1]) ** 2, axis=0)


def verify_dissipativity(spec, sample_count, seed, radius=5.0):
    """
    Estimate beta in 2<dy, db2> + |dsigma2|^2 <= -beta |dy|^2 and the
    Lipschitz constant L of (b2, sigma2); the assumption needs beta > 2L.
    """
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x = _sample_slow_states(spec.A, rng, sample_count, radius)
    y1 = rng.uniform(-radius, radius, (spec.m, sample_count))
    y2 = rng.uniform(-radius, radius, (spec.m, sample_count))
    dy = y1 - y2
    db = spec.b2(x, y1) - spec.b2(x, y2)
    ds = spec.sigma2(x, y1) - spec.sigma2(x, y2)
    ratio = (2.0 * np.sum(dy * db, axis=0) + _frobenius_sq(ds)) / np.sum(dy ** 2, axis=0)
    beta_hat = -float(np.max(ratio))

    # half the Lipschitz pairs share x so the fast-variable direction is probed on its own
    x2 = _sample_slow_states(spec.A, rng, sample_count, radius)
    x2[:, : sample_count // 2] = x[:, : sample_count // 2]
    dz_sq = np.sum((x - x2) ** 2, axis=0) + np.sum(dy ** 2, axis=0)
    db_l = spec.b2(x, y1) - spec.b2(x2, y2)
    ds_l = spec.sigma2(x, y1) - spec.sigma2(x2, y2)
    L_hat = float(np.max((np.sum(db_l ** 2, axis=0) + _frobenius_sq(ds_l)) / dz_sq))

    violations = int(np.sum(ratio >= 0.0))
    report = DissipativityReport(
        beta_hat=beta_hat, L_hat=L_hat, alpha_hat=beta_hat - 2.0 * L_hat,
        violations=violations, passed=beta_hat > 2.0 * L_hat,
    )
    if not report.passed:
        logger.warning("dissipativity fails beta_hat=%.4g L_hat=%.4g", beta_hat, L_hat)
    return report


def _second_difference(zeta_at, y, i, h):
    step = np.zeros_like(y)
    step[i] = h
    return (zeta_at(y + step) - 2.0 * zeta_at(y) + zeta_at(y - step)) / h ** 2


def _generator(spec, zeta_at, x, y, h):
    """L_1^x zeta(y) = <b2, grad zeta> + 1/2 tr(sigma2 sigma2^T hess zeta) by central differences."""
    m = spec.m
    b2 = spec.b2(x, y)
    s2 = spec.sigma2(x, y)
    diffusion = np.einsum('ik...,jk...->ij...', s2, s2)
    value = np.zeros(y.shape[1:])
    for i in range(m):
        e_i = np.zeros_like(y)
        e_i[i] = h
        grad_i = (zeta_at(y + e_i) - zeta_at(y - e_i)) / (2.0 * h)
        value = value + b2[i] * grad_i + 0.5 * diffusion[i, i] * _second_difference(zeta_at, y, i, h)
        for j in range(i + 1, m):
            e_j = np.zeros_like(y)
            e_j[j] = h
            mixed = (zeta_at(y + e_i + e_j) - zeta_at(y + e_i - e_j)
                     - zeta_at(y - e_i + e_j) + zeta_at(y - e_i - e_j)) / (4.0 * h * h)
            value = value + diffusion[i, j] * mixed
    return value


def detect_kinks(zeta_at, y, h, threshold=0.25):
    """Grid points where second differences at steps h and 10h disagree by more than `threshold`."""
    kink = np.zeros(y.shape[1:], dtype=bool)
    for i in range(y.shape[0]):
        fine = _second_difference(zeta_at, y, i, h)
        coarse = _second_difference(zeta_at, y, i, 10.0 * h)
        size = np.maximum(np.abs(fine), np.abs(coarse))
        kink |= (np.abs(fine - coarse) > threshold * size) & (size > 1e-6)
    return kink


def verify_lyapunov(spec, zeta, grid, L1, L2, ball_center, ball_radius,
                    x_points=None, h=1e-4, kink_radius=1e-3, tol=1e-6):
    """
    max over the (x, y) grid of L_1^x zeta(y) + L1 zeta(y) - L2 1_B(y),
    skipping points within kink_radius of a detected non-smooth point of zeta.
    `grid` is a 1D array when m == 1, otherwise an (m, G) array.
    """
    y = np.asarray(grid, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    center = np.atleast_1d(np.asarray(ball_center, dtype=float))
    x_points = [spec.x0] if x_points is None else [np.atleast_1d(p) for p in x_points]
    in_ball = np.linalg.norm(y - center[:, None], axis=0) <= ball_radius

    worst, worst_point, checked, excluded, kinks = -np.inf, None, 0, 0, []
    for x in x_points:
        x_col = np.asarray(x, dtype=float)[:, None]
        zeta_at = lambda pts: zeta(x_col, pts)
        kink = detect_kinks(zeta_at, y, h)
        kink_points = y[:, kink]
        keep = np.ones(y.shape[1], dtype=bool)
        for point in kink_points.T:
            keep &= np.linalg.norm(y - point[:, None], axis=0) > kink_radius
        kinks.extend(kink_points.T.tolist())
        lhs = _generator(spec, zeta_at, x_col, y, h)
        violation = lhs + L1 * zeta_at(y) - L2 * in_ball
        violation = np.where(keep, violation, -np.inf)
        checked += int(keep.sum())
        excluded += int((~keep).sum())
        k = int(np.argmax(violation))
        if violation[k] > worst:
            worst, worst_point = float(violation[k]), [np.asarray(x).tolist(), y[:, k].tolist()]
    report = LyapunovReport(
        max_violation=worst, worst_point=worst_point, checked=checked,
        excluded=excluded, kinks=kinks, passed=worst <= tol,
    )
    if not report.passed:
        logger.warning("lyapunov condition fails max_violation=%.4g at %s", worst, worst_point)
    return report


def verify_slow_coefficients(spec, sample_count, seed, radius=5.0, bound=None):
    """
    Sampled estimate of L in |db1|^2 + |dsigma1|^2 <= L(|dx|^2 + |dy|^2)
    and |b1|^2, |sigma1|^2 <= L.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x1 = _sample_slow_states(spec.A, rng, sample_count, radius)
    x2 = _sample_slow_states(spec.A, rng, sample_count, radius)
    y1 = rng.uniform(-radius, radius, (spec.m, sample_count))
    y2 = rng.uniform(-radius, radius, (spec.m, sample_count))
    b_1, b_2 = spec.b1(x1, y1), spec.b1(x2, y2)
    s_1, s_2 = spec.sigma1(x1, y1), spec.sigma1(x2, y2)
    dz_sq = np.sum((x1 - x2) ** 2, axis=0) + np.sum((y1 - y2) ** 2, axis=0)
    lipschitz = float(np.max((np.sum((b_1 - b_2) ** 2, axis=0) + _frobenius_sq(s_1 - s_2)) / dz_sq))
    sup_b = float(np.max(np.sum(b_1 ** 2, axis=0)))
    sup_s = float(np.max(_frobenius_sq(s_1)))
    L_hat = max(lipschitz, sup_b, sup_s)
    passed = bool(np.isfinite(L_hat)) and (bound is None or L_hat <= bound)
    return SlowCoefficientReport(L_hat=L_hat, lipschitz_hat=lipschitz, sup_b1_sq=sup_b,
                                 sup_sigma1_sq=sup_s, passed=passed)
