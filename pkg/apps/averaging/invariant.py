"""
Invariant measure of the frozen fast equation

    dY = b2(x, Y)dt + sigma2(x, Y)dW2,   x fixed,

estimated from a handful of long Euler chains run side by side on the
batch axis. Each chain burns in for 10/alpha_hat time units and is then
thinned; moments carry batch-means standard errors.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from apps.simulate.parallel import ordered_map, path_blocks
from apps.simulate.scheme import run_frozen
from apps.simulate.system import SimConfig
from apps.simulate.verifiers import verify_dissipativity

from .estimates import Estimate, batch_means
from .exceptions import DissipativityError, MixingRateError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AveragingConfig:
    dt: float = 0.02
    burn_in: float = None       # time units; None means 10 / alpha_hat
    thin: int = 5
    n: int = 16000              # retained samples over all chains
    chains: int = 32
    batches: int = 5            # batch-means batches per chain
    seed: int = 0
    override: bool = False
    dissipativity_samples: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.thin < 1 or self.chains < 1 or self.n < self.chains:
            raise ValueError("thin, chains must be >= 1 and n >= chains")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    @property
    def per_chain(self):
        return int(math.ceil(self.n / self.chains))

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class InvariantMeasureEstimate:
    x: np.ndarray
    samples: np.ndarray       # (S, C, m): thinned states per chain after burn-in
    mean: Estimate
    covariance: np.ndarray
    n_effective: float
    alpha_hat: float

    @property
    def flat(self):
        """Samples as an (m, S*C) batch."""
        S, C, m = self.samples.shape
        return self.samples.reshape(S * C, m).T

    def expect(self, fn, batches=5):
        """Batch-means estimate of E[fn(Y)] where fn maps (m, B) to (*shape, B)."""
        S, C, _ = self.samples.shape
        values = np.asarray(fn(self.flat), dtype=float)
        values = np.moveaxis(values.reshape(values.shape[:-1] + (S, C)), (-2, -1), (0, 1))
        return batch_means(values, batches)

    @property
    def second_moment(self):
        return float(np.mean(np.sum(self.samples ** 2, axis=-1)))


def mixing_rate(spec, cfg):
    """alpha_hat = beta_hat - 2 L_hat; raises unless it is positive or cfg.override is set."""
    report = verify_dissipativity(spec, cfg.dissipativity_samples, cfg.seed)
    if not report.passed and not cfg.override:
        raise DissipativityError(report.beta_hat, report.L_hat)
    return report.alpha_hat


def burn_in_time(cfg, alpha_hat):
    if cfg.burn_in is not None:
        return cfg.burn_in
    if not alpha_hat > 0:
        raise MixingRateError(alpha_hat)
    return 10.0 / alpha_hat


def estimate_invariant(spec, x, cfg=None, threads=None):
    cfg = cfg or AveragingConfig()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alpha_hat = mixing_rate(spec, cfg)
    burn = burn_in_time(cfg, alpha_hat)
    burn_samples = int(math.ceil(burn / (cfg.dt * cfg.thin) - 1e-9))
    total_steps = (burn_samples + cfg.per_chain) * cfg.thin
    sim = SimConfig(dt=cfg.dt, horizon=total_steps * cfg.dt, seed=cfg.seed)
    logger.debug(
        "invariant measure x=%s alpha_hat=%.4g burn_in=%.3g chains=%d steps=%d",
        x.tolist(), alpha_hat, burn, cfg.chains, total_steps,
    )

    def run(block):
        streams = list(block)
        y_init = np.repeat(spec.y0[:, None], len(streams), axis=1)
        states = run_frozen(spec, x, y_init, sim, streams=streams, sample_every=cfg.thin)
        return states[burn_samples + 1:]

    blocks = ordered_map(run, path_blocks(cfg.chains), threads)
    kept = np.concatenate(blocks, axis=2)                  # (S, m, C)
    samples = np.transpose(kept, (0, 2, 1)).copy()         # (S, C, m)
    mean = batch_means(samples, cfg.batches)
    flat = samples.reshape(-1, spec.m)
    covariance = np.atleast_2d(np.cov(flat, rowvar=False)) if flat.shape[0] > 1 else np.zeros((spec.m, spec.m))
    spread = np.diag(covariance)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(mean.stderr > 0, spread / mean.stderr ** 2, flat.shape[0])
    n_effective = float(np.min(ratio)) if ratio.size else float(flat.shape[0])
    return InvariantMeasureEstimate(
        x=x, samples=samples, mean=mean, covariance=covariance,
        n_effective=n_effective, alpha_hat=alpha_hat,
    )


def gaussian_expectation(fn, mean, std, order=60):
    """E[fn(Y)] for scalar Y ~ N(mean, std^2) by Gauss-Hermite quadrature."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    values = np.asarray(fn(mean + std * nodes), dtype=float)
    return float(np.dot(weights, values) / np.sqrt(2.0 * np.pi))
