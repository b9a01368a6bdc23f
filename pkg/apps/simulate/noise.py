"""
Counter-based Brownian increments.

Every (root seed, path index, channel) names its own Philox stream, so the
increments of a path never depend on which worker simulated it or in
which order the paths were run.
"""
from dataclasses import dataclass

import numpy as np
from django.db import models


class Channel(models.IntegerChoices):
    W1 = 0, 'slow noise'
    W2 = 1, 'fast noise'


@dataclass(frozen=True)
class NoiseStream:
    seed: int
    path: int
    channel: int

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.path), int(self.channel)))
        return np.random.Generator(np.random.Philox(sequence))

    def increments(self, steps, dim, dt):
        """Brownian increments with shape (steps, dim), variance dt each."""
        if dim == 0:
            return np.zeros((steps, 0))
        return np.sqrt(dt) * self.generator().standard_normal((steps, dim))


class BlockNoise:
    """
    Increments for a block of streams, drawn chunk by chunk.
    take(k) returns shape (k, dim, len(paths)); column b continues exactly
    the sequence NoiseStream(seed, paths[b], channel).increments gives.
    """

    def __init__(self, seed, paths, channel, dim, dt):
        self.dim = dim
        self.scale = np.sqrt(dt)
        self.generators = [NoiseStream(seed, path, channel).generator() for path in paths]

    def take(self, steps):
        out = np.empty((steps, self.dim, len(self.generators)))
        if self.dim == 0:
            return out
        for b, gen in enumerate(self.generators):
            out[:, :, b] = self.scale * gen.standard_normal((steps, self.dim))
        return out
