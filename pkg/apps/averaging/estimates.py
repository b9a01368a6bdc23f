from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo value with its standard error and sample count."""

    value: np.ndarray
    stderr: np.ndarray
    n_samples: int

    def __post_init__(self):
        value = np.asarray(self.value, dtype=float)
        stderr = np.broadcast_to(np.asarray(self.stderr, dtype=float), value.shape).copy()
        if np.any(stderr < 0):
            raise ValueError("stderr entries must be nonnegative")
        object.__setattr__(self, 'value', value)
        object.__setattr__(self, 'stderr', stderr)

    @classmethod
    def exact(cls, value, n_samples=0):
        value = np.asarray(value, dtype=float)
        return cls(value=value, stderr=np.zeros_like(value), n_samples=n_samples)

    def agrees_with(self, other, sigmas=3.0):
        """Entrywise |a - b| <= sigmas * sqrt(se_a^2 + se_b^2)."""
        gap = np.abs(self.value - np.asarray(getattr(other, 'value', other), dtype=float))
        combined = np.sqrt(self.stderr ** 2 + np.asarray(getattr(other, 'stderr', 0.0)) ** 2)
        return bool(np.all(gap <= sigmas * combined))

    def to_json(self):
        return {'value': self.value.tolist(), 'stderr': self.stderr.tolist(), 'n_samples': self.n_samples}


def batch_means(samples, batches_per_chain=5):
    """
    Mean and batch-means standard error of `samples` with shape
    (S, C, *shape): S thinned states along each of C independent chains.
    Every chain is cut into contiguous batches; the stderr is the spread of
    all batch means over sqrt(number of batches).
    """
    samples = np.asarray(samples, dtype=float)
    total, chains = samples.shape[:2]
    count = total * chains
    first = samples[0, 0]
    if np.all(samples == first):
        return Estimate.exact(first, n_samples=count)
    batches = max(1, min(batches_per_chain, total))
    usable = (total // batches) * batches
    grouped = samples[:usable].reshape((batches, usable // batches, chains) + samples.shape[2:])
    means = grouped.mean(axis=1).reshape((batches * chains,) + samples.shape[2:])
    stderr = means.std(axis=0, ddof=1) / np.sqrt(means.shape[0]) if means.shape[0] > 1 else np.zeros(first.shape)
    return Estimate(value=samples.mean(axis=(0, 1)), stderr=stderr, n_samples=count)
