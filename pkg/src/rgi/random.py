"""Reproducible random streams.

Bits come from MT19937 (a twisted generalized feedback shift register)
seeded through numpy's ``SeedSequence``.  The conversions from raw 32-bit
words to uniforms, normals and permutations are implemented here rather
than delegated to ``numpy.random.Generator`` so the streams do not depend
on numpy's distribution code, which is allowed to change between releases.

* uniform: ``(a >> 5) * 2**26 + (b >> 6)`` scaled by ``2**-53`` from two
  consecutive words (the classic ``genrand_res53`` construction), giving a
  double in ``[0, 1)``.
* normal: Box-Muller on pairs of uniforms.
* permutation: stable argsort of ``n`` uniforms.
"""

import numpy as np


class Rng:
    def __init__(self, seed=0):
        self.seed = int(seed)
        self._bits = np.random.MT19937(self.seed)

    def _words(self, n):
        return self._bits.random_raw(n)

    def uniform(self, size):
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        w = self._words(2 * n)
        a = w[0::2] >> np.uint64(5)
        b = w[1::2] >> np.uint64(6)
        out = (a.astype(np.float64) * 67108864.0 + b.astype(np.float64)) / 9007199254740992.0
        return out.reshape(shape)

    def normal(self, size, loc=0.0, scale=1.0):
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape, dtype=np.int64))
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        u1 = 1.0 - u[:m]  # (0, 1], keeps log finite
        u2 = u[m:]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])[:n]
        return loc + scale * z.reshape(shape)

    def permutation(self, n):
        return np.argsort(self.uniform(n), kind="stable")

    def spawn(self, key):
        """Independent child stream derived from this stream's seed and ``key``."""
        seq = np.random.SeedSequence([self.seed, int(key)])
        child = Rng.__new__(Rng)
        child.seed = self.seed
        child._bits = np.random.MT19937(seq)
        return child


def as_rng(seed_or_rng):
    if isinstance(seed_or_rng, Rng):
        return seed_or_rng
    return Rng(0 if seed_or_rng is None else seed_or_rng)
