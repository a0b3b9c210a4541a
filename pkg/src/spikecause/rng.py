"""Seeded random source with a fully documented, reproducible stream.

Uniform deviates come from numpy's PCG64 (permuted congruential generator,
64-bit output); identical seeds give identical streams on every platform.
Normal deviates are produced by the Box-Muller transform applied to that
uniform stream rather than numpy's ziggurat sampler, and shuffles use an
explicit Fisher-Yates walk, so every draw is pinned to this module's code
instead of numpy internals.
"""

import numpy as np

ALGORITHM = "pcg64+box-muller"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed, *tags):
    """Mix a base seed with string/int tags into a new 64-bit seed.

    FNV-1a over the tag text, then a splitmix64 finalizer over the combined
    value. Pure integer arithmetic, so the derivation is identical on every
    platform; used by the harness to give each (cell, topology, model) job
    its own independent stream.
    """
    h = _FNV_OFFSET
    for tag in tags:
        for byte in str(tag).encode("utf-8") + b"/":
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return _splitmix64((int(base_seed) & _MASK64) ^ h)


class Rng:
    """Deterministic random stream for one consumer.

    Each method documents exactly how many uniforms it consumes so call
    sequences stay reproducible across releases.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, *tags):
        """Independent child stream keyed by the given tags."""
        return Rng(derive_seed(self.seed, *tags))

    def uniform(self, size=None):
        """Uniform draws on [0, 1); one uniform per element."""
        return self._gen.random(size)

    def normal(self, mean=0.0, std=1.0, size=None):
        """Box-Muller normals: two uniforms per pair of deviates.

        For an odd request the sine partner of the last pair is discarded.
        ``1 - u`` shifts the first uniform to (0, 1] so the log is finite.
        """
        if size is None:
            count = 1
        else:
            count = int(np.prod(size))
        pairs = (count + 1) // 2
        u1 = self._gen.random(pairs)
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        z = mean + std * z[:count]
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def integer(self, upper):
        """One integer uniform on [0, upper); consumes one 64-bit draw."""
        return int(self._gen.integers(0, upper))

    def shuffle(self, values):
        """In-place Fisher-Yates shuffle of a 1-D numpy array or list."""
        for i in range(len(values) - 1, 0, -1):
            j = self.integer(i + 1)
            values[i], values[j] = values[j], values[i]

    def permutation(self, count):
        idx = np.arange(count)
        self.shuffle(idx)
        return idx
