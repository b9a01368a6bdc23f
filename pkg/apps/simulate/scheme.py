"""
Resolvent splitting for the slow-fast inclusion.

The slow step is explicit Euler-Maruyama followed by the resolvent of A,
the fast step is explicit Euler-Maruyama on the 1/gamma time scale. All
block routines work on arrays with a trailing path axis: X is (n, B),
Y is (m, B).
"""
import csv
import logging
import time
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.db import models

from .exceptions import FastScaleInstabilityError
from .noise import BlockNoise, Channel
from .parallel import ordered_map, path_blocks

logger = logging.getLogger(__name__)

NOISE_CHUNK = 1024


class Coupling(models.TextChoices):
    INDEPENDENT = 'independent', 'Independent noise per path'
    SYNCHRONOUS = 'synchronous', 'Common noise for every path'


def apply_matrix(matrix, vec):
    """
    Contract (k, d, *B) with (d, *B) over d, one column at a time, so the
    result for a path does not depend on how many paths share the batch.
    """
    if matrix.shape[1] == 0:
        return np.zeros(matrix.shape[:1] + matrix.shape[2:])
    acc = matrix[:, 0] * vec[0]
    for j in range(1, matrix.shape[1]):
        acc = acc + matrix[:, j] * vec[j]
    return acc


def step_slow(spec, x, y, dt, epsilon, dW1):
    """
    One resolvent step of the slow inclusion. Returns (x_next, dK) where
    x_next = J_dt(x + b1 dt + sqrt(eps) sigma1 dW1) and dK is what the
    resolvent removed.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    drift = spec.b1(x, y)
    noise = apply_matrix(spec.sigma1(x, y), np.asarray(dW1, dtype=float))
    pre = x + drift * dt + np.sqrt(epsilon) * noise
    x_next = spec.A.resolvent(dt, pre)
    return x_next, pre - x_next


def step_fast(spec, x, y, dt, gamma, dW2):
    y = np.asarray(y, dtype=float)
    drift = spec.b2(x, y)
    noise = apply_matrix(spec.sigma2(x, y), np.asarray(dW2, dtype=float))
    return y + drift * (dt / gamma) + noise / np.sqrt(gamma)


def step_frozen(spec, x, y, dt, dW2):
    y = np.asarray(y, dtype=float)
    return y + spec.b2(x, y) * dt + apply_matrix(spec.sigma2(x, y), dW2)


def check_fast_guard(dt, gamma, guard=None):
    guard = settings.MVLDP['FAST_GUARD'] if guard is None else guard
    if dt > gamma / guard * (1 + 1e-12):
        raise FastScaleInstabilityError(dt, gamma, guard)


@dataclass
class SlowFastPath:
    times: np.ndarray   # (N+1,)
    X: np.ndarray       # (N+1, n)
    Y: np.ndarray       # (N+1, m)
    dK: np.ndarray      # (N, n), dK[k] is the increment over (t_k, t_{k+1}]
    path_id: int = 0

    @property
    def total_variation(self):
        return float(np.linalg.norm(self.dK, axis=1).sum())

    def max_domain_distance(self, op):
        return float(np.max(op.distance(self.X.T)))

    def rows(self):
        dk = np.vstack([np.zeros((1, self.dK.shape[1])), self.dK])
        for k, t in enumerate(self.times):
            yield [t, *self.X[k], *self.Y[k], *dk[k]]


@dataclass
class EnsembleResult:
    terminal_x: np.ndarray        # (M, n)
    terminal_y: np.ndarray        # (M, m)
    sup_norm: np.ndarray          # (M,) running sup of |X_t|
    total_variation: np.ndarray   # (M,) discrete total variation of K
    horizon: float

    @property
    def path_count(self):
        return self.terminal_x.shape[0]


def _simulate_block(spec, scales, cfg, paths, record):
    dt, steps = cfg.dt, cfg.steps
    width = len(paths)
    slow_noise = BlockNoise(cfg.seed, paths, Channel.W1, spec.d1, dt)
    fast_noise = BlockNoise(cfg.seed, paths, Channel.W2, spec.d2, dt)
    x = np.repeat(spec.x0[:, None], width, axis=1)
    y = np.repeat(spec.y0[:, None], width, axis=1)
    sup_norm = np.linalg.norm(x, axis=0)
    total_variation = np.zeros(width)
    if record:
        xs = np.empty((steps + 1, spec.n, width))
        ys = np.empty((steps + 1, spec.m, width))
        dks = np.empty((steps, spec.n, width))
        xs[0], ys[0] = x, y
    for start in range(0, steps, NOISE_CHUNK):
        count = min(NOISE_CHUNK, steps - start)
        dW1, dW2 = slow_noise.take(count), fast_noise.take(count)
        for j in range(count):
            x_next, dk = step_slow(spec, x, y, dt, scales.epsilon, dW1[j])
            y = step_fast(spec, x, y, dt, scales.gamma, dW2[j])
            x = x_next
            sup_norm = np.maximum(sup_norm, np.linalg.norm(x, axis=0))
            total_variation += np.linalg.norm(dk, axis=0)
            if record:
                k = start + j
                xs[k + 1], ys[k + 1], dks[k] = x, y, dk
    if record:
        return xs, ys, dks
    return x, y, sup_norm, total_variation


def run_system(spec, scales, cfg, path=0):
    """Simulate one path of the coupled system with the noise of stream `path`."""
    check_fast_guard(cfg.dt, scales.gamma)
    xs, ys, dks = _simulate_block(spec, scales, cfg, [path], record=True)
    return SlowFastPath(times=cfg.times, X=xs[:, :, 0], Y=ys[:, :, 0], dK=dks[:, :, 0], path_id=path)


def run_paths(spec, scales, cfg, threads=None):
    """Full trajectories for paths 0..cfg.path_count-1."""
    check_fast_guard(cfg.dt, scales.gamma)

    def simulate(block):
        xs, ys, dks = _simulate_block(spec, scales, cfg, list(block), record=True)
        return [
            SlowFastPath(times=cfg.times, X=xs[:, :, b], Y=ys[:, :, b], dK=dks[:, :, b], path_id=path)
            for b, path in enumerate(block)
        ]

    blocks = ordered_map(simulate, path_blocks(cfg.path_count), threads)
    return [path for block in blocks for path in block]


def run_ensemble(spec, scales, cfg, t=None, threads=None):
    """
    Terminal states and path functionals for cfg.path_count paths without
    storing trajectories. Path i uses the same noise as run_system(path=i).
    """
    if t is not None:
        cfg = cfg.with_horizon(t)
    check_fast_guard(cfg.dt, scales.gamma)
    started = time.monotonic()
    logger.info(
        "ensemble start paths=%d steps=%d eps=%g gamma=%g",
        cfg.path_count, cfg.steps, scales.epsilon, scales.gamma,
    )

    def simulate(block):
        result = _simulate_block(spec, scales, cfg, list(block), record=False)
        logger.debug("ensemble block done first=%d size=%d", block.start, len(block))
        return result

    blocks = ordered_map(simulate, path_blocks(cfg.path_count), threads)
    result = EnsembleResult(
        terminal_x=np.concatenate([b[0] for b in blocks], axis=1).T,
        terminal_y=np.concatenate([b[1] for b in blocks], axis=1).T,
        sup_norm=np.concatenate([b[2] for b in blocks]),
        total_variation=np.concatenate([b[3] for b in blocks]),
        horizon=cfg.horizon,
    )
    logger.info("ensemble done paths=%d elapsed=%.2fs", cfg.path_count, time.monotonic() - started)
    return result


def run_frozen(spec, x, y_init, cfg, coupling=Coupling.INDEPENDENT, streams=None,
               sample_every=1, observer=None):
    """
    Euler path(s) of the frozen fast equation dY = b2(x,Y)dt + sigma2(x,Y)dW2.

    y_init is (m,) for one path or (m, B) for B paths. Column b draws its
    noise from stream streams[b]; by default stream b (independent) or
    stream 0 for every column (synchronous). States at steps divisible by
    sample_every are returned with shape (samples, m) or (samples, m, B).
    observer(step, y), when given, is called with every state.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y_init, dtype=float)
    single = y.ndim == 1
    if single:
        y = y[:, None]
    width = y.shape[1]
    if streams is None:
        streams = [0] * width if coupling == Coupling.SYNCHRONOUS else list(range(width))
    unique, column_stream = np.unique(np.asarray(streams, dtype=np.int64), return_inverse=True)
    noise = BlockNoise(cfg.seed, unique.tolist(), Channel.W2, spec.d2, cfg.dt)
    x_col = x[:, None]
    steps = cfg.steps
    samples = [y.copy()]
    if observer is not None:
        observer(0, y)
    for start in range(0, steps, NOISE_CHUNK):
        count = min(NOISE_CHUNK, steps - start)
        dW2 = noise.take(count)
        for j in range(count):
            y = step_frozen(spec, x_col, y, cfg.dt, dW2[j][:, column_stream])
            k = start + j + 1
            if observer is not None:
                observer(k, y)
            if k % sample_every == 0:
                samples.append(y.copy())
    out = np.stack(samples)
    return out[:, :, 0] if single else out


def write_paths_csv(paths, target):
    """
    Dump paths as CSV with columns t, x0.., y0.., dk0.. (dk on row k is the
    increment ending at t_k). Several paths go to one long file with a
    leading path_id column.
    """
    paths = list(paths)
    n, m = paths[0].X.shape[1], paths[0].Y.shape[1]
    header = ['t'] + [f'x{i}' for i in range(n)] + [f'y{i}' for i in range(m)] + [f'dk{i}' for i in range(n)]
    long_format = len(paths) > 1
    if long_format:
        header = ['path_id'] + header
    with open(target, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for path in paths:
            for row in path.rows():
                values = [repr(float(v)) for v in row]
                writer.writerow([path.path_id, *values] if long_format else values)
    logger.info("wrote paths=%d file=%s", len(paths), target)
