"""Deterministic, splittable random streams.

Every random quantity is drawn from an :class:`RngStream` addressed by a
root seed and an integer path such as ``(experiment, n, replication, draw)``.
Streams are built on numpy's ``SeedSequence`` (the path becomes the spawn
key) feeding a Philox counter-based bit generator, so distinct paths give
independent streams and the same path always replays the same numbers.
Normals use the Box-Muller transform on the stream's own uniforms, which
keeps the variate sequence fixed by this module rather than by numpy's
internal sampling algorithms.
"""
from __future__ import annotations

import numpy as np

MAX_DEPTH = 8
_U64 = 2**64


class RngStream:
    def __init__(self, root, path=()):
        root = int(root)
        if not 0 <= root < _U64:
            raise ValueError("root seed must be an unsigned 64-bit integer")
        path = tuple(int(p) for p in path)
        if len(path) > MAX_DEPTH:
            raise ValueError(f"stream path deeper than {MAX_DEPTH}")
        if any(p < 0 for p in path):
            raise ValueError("stream path elements must be nonnegative")
        self.root = root
        self.path = path
        seq = np.random.SeedSequence(entropy=root, spawn_key=path)
        self._bits = np.random.Philox(seq)

    def child(self, *elements):
        return RngStream(self.root, self.path + tuple(elements))

    def words(self, size):
        """Raw 64-bit unsigned integers."""
        return self._bits.random_raw(size).astype(np.uint64)

    def uniform(self, size):
        """Doubles in [0, 1) from the top 53 bits of each word."""
        return (self.words(size) >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)

    def uniform_range(self, low, high, size):
        return low + (high - low) * self.uniform(size)

    def normal(self, size):
        """Standard normals via Box-Muller, consuming two uniforms per pair."""
        size = int(size)
        half = (size + 1) // 2
        u = self.uniform(2 * half)
        u1 = 1.0 - u[:half]  # (0, 1], keeps log finite
        u2 = u[half:]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * half)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        return z[:size]


def rng_stream(root, path=()) -> RngStream:
    return RngStream(root, path)


def uniform_jitter(stream: RngStream, n, scale=0.2):
    """Location perturbations from uniform(-scale/n, scale/n).

    ``scale=0.2`` is the 1/(5n) perturbation used by the identifiability
    simulations; ``scale=0.1`` gives 1/(10n).
    """
    half_width = scale / n
    return stream.uniform_range(-half_width, half_width, n)
