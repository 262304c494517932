"""Deterministic random numbers: counter-based splitmix64 plus Box-Muller.

Noise realisations, weight initialisations and test constructions must be
bit-identical across platforms and numpy versions, so the generator is
fully specified here instead of delegating to ``numpy.random``.
"""

import numpy as np

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(v):
    v = (v ^ (v >> np.uint64(30))) * _MIX1
    v = (v ^ (v >> np.uint64(27))) * _MIX2
    return v ^ (v >> np.uint64(31))


class Prng:
    """splitmix64 output stream indexed by a running counter."""

    def __init__(self, seed: int = 0):
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._count = 0

    def raw(self, n):
        """Next ``n`` raw 64-bit words."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * _GOLD)

    def uniform(self, size=None):
        """Uniform floats in [0, 1) with 53-bit resolution."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def uniform_signed(self, scale, size=None):
        """Uniform floats in (-scale, scale]."""
        u = self.uniform(size)
        return (1.0 - 2.0 * u) * scale

    def normal(self, size=None, std=1.0):
        """Gaussian variates via the Box-Muller transform."""
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], so log is finite
        ang = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(ang), r * np.sin(ang)])[:n] * std
        if size is None:
            return float(z[0])
        return z.reshape(size)

    def permutation(self, n):
        """Deterministic permutation of range(n)."""
        return np.argsort(self.uniform(n), kind="stable")
