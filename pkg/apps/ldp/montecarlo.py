"""
Prelimit Monte Carlo: the Laplace functional

    u^h_{eps,gamma}(t, x0, y0) = -eps log E[exp(-h(X_t)/eps)]

and the exponential tightness probe on sup_{s<=t} |X_s|.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from apps.averaging.estimates import Estimate
from apps.simulate.scheme import run_ensemble
from apps.simulate.system import ScaleParams, SimConfig

from .exceptions import WeightDegeneracyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonteCarloConfig:
    paths: int = 2000
    dt: float = None        # None: largest step with t/dt integral and dt <= gamma/FAST_GUARD; otherwise shrunk to divide t
    seed: int = 0
    min_ess: float = 10.0

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be at least 1")

    def sim_config(self, scales, t):
        if self.dt is None:
            guard = settings.MVLDP['FAST_GUARD']
            steps = max(1, int(math.ceil(t * guard / scales.gamma - 1e-9)))
            return SimConfig(dt=t / steps, horizon=t, seed=self.seed, path_count=self.paths)
        base = SimConfig(dt=self.dt, horizon=self.dt, seed=self.seed, path_count=self.paths)
        return base.with_horizon(t)

    def replace(self, **changes):
        return replace(self, **changes)


def gamma_schedule(epsilons, exponent=None):
    """ScaleParams with gamma = eps ** exponent (default exponent from settings)."""
    exponent = settings.MVLDP['GAMMA_EXPONENT'] if exponent is None else exponent
    if not exponent > 1:
        raise ValueError("gamma/eps must vanish, so the exponent has to exceed 1")
    return [ScaleParams(epsilon=float(eps), gamma=float(eps) ** exponent) for eps in epsilons]


@dataclass(frozen=True)
class LaplaceEstimate(Estimate):
    epsilon: float = 0.0
    gamma: float = 0.0
    ess: float = 0.0

    def row(self):
        return [self.epsilon, self.gamma, float(self.value), float(self.stderr), self.n_samples]


LAPLACE_HEADER = ['epsilon', 'gamma', 'value', 'stderr', 'n_paths']


def laplace_estimate(values, epsilon, min_ess=10.0):
    """
    -eps log mean exp(-values/eps) with the smallest value factored out,
    and its delta-method standard error.
    """
    values = np.asarray(values, dtype=float).ravel()
    count = values.size
    low = float(values.min())
    weights = np.exp(-(values - low) / epsilon)
    mean = float(weights.mean())
    ess = float(weights.sum() ** 2 / np.sum(weights ** 2))
    if ess < min(min_ess, count) - 1e-9:
        raise WeightDegeneracyError(ess, count, epsilon)
    stderr = epsilon * float(weights.std(ddof=1)) / (mean * math.sqrt(count)) if count > 1 else 0.0
    return low - epsilon * math.log(mean), stderr, ess


def laplace(spec, scales, t, h, cfg=None, threads=None):
    cfg = cfg or MonteCarloConfig()
    sim = cfg.sim_config(scales, t)
    ensemble = run_ensemble(spec, scales, sim, threads=threads)
    values = np.atleast_1d(h(ensemble.terminal_x.T))
    value, stderr, ess = laplace_estimate(values, scales.epsilon, cfg.min_ess)
    logger.info("laplace eps=%g gamma=%g value=%.6g stderr=%.2g ess=%.0f",
                scales.epsilon, scales.gamma, value, stderr, ess)
    return LaplaceEstimate(value=value, stderr=stderr, n_samples=cfg.paths,
                           epsilon=scales.epsilon, gamma=scales.gamma, ess=ess)


def laplace_sweep(spec, t, h, epsilons, cfg=None, exponent=None, threads=None):
    """Laplace values along gamma = eps ** exponent; seeds are shared across eps."""
    return [laplace(spec, scales, t, h, cfg, threads) for scales in gamma_schedule(epsilons, exponent)]


def wilson_interval(count, total, z=1.96):
    if total < 1 or not 0 <= count <= total:
        raise ValueError("need 0 <= count <= total and total >= 1")
    p = count / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class TightnessRow:
    threshold: float
    count: int
    total: int
    p_hat: float
    stderr: float
    log_p: float          # eps log p_hat; -inf when censored
    log_low: float
    log_high: float
    censored: bool

    def to_json(self):
        return {key: (None if isinstance(val, float) and not math.isfinite(val) else val)
                for key, val in self.__dict__.items()}


def _eps_log(epsilon, p):
    return epsilon * math.log(p) if p > 0 else -math.inf


def tightness_probe(spec, scales, t, thresholds, cfg=None, z=1.96, threads=None):
    """
    Fraction of paths whose running sup |X| exceeds each threshold, as
    eps log p_hat with Wilson bounds. Zero counts are censored: only the
    upper bound carries information.
    """
    thresholds = [float(m) for m in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    cfg = cfg or MonteCarloConfig()
    ensemble = run_ensemble(spec, scales, cfg.sim_config(scales, t), threads=threads)
    total = ensemble.path_count
    rows = []
    for level in thresholds:
        count = int(np.sum(ensemble.sup_norm > level))
        p_hat = count / total
        low, high = wilson_interval(count, total, z)
        rows.append(TightnessRow(
            threshold=level, count=count, total=total, p_hat=p_hat,
            stderr=math.sqrt(p_hat * (1 - p_hat) / total),
            log_p=_eps_log(scales.epsilon, p_hat),
            log_low=_eps_log(scales.epsilon, low),
            log_high=_eps_log(scales.epsilon, high),
            censored=count == 0,
        ))
    logger.info("tightness eps=%g counts=%s of %d", scales.epsilon, [r.count for r in rows], total)
    return rows


def strictly_decreasing(rows):
    """eps log p_hat decreases along the thresholds; censored entries count as upper bounds."""
    for before, after in zip(rows, rows[1:]):
        if after.censored:
            continue
        if before.censored or not after.log_p < before.log_p:
            return False
    return True
