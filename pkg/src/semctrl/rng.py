"""splitmix64 generator with uniform, Gaussian and shuffle helpers.

The integer stream is bit-exact with the reference C implementation, so
corpora and noise can be regenerated from ``(n, seed)`` anywhere.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class Rng:
    __slots__ = ("state",)

    def __init__(self, seed=0):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform01(self):
        """Uniform draw in [0, 1): ``next_u64() / 2**64``."""
        return self.next_u64() / 18446744073709551616.0

    def gaussian(self):
        """Standard normal via Box-Muller on two uniform draws (cosine branch)."""
        u1 = self.uniform01()
        u2 = self.uniform01()
        # 1 - u1 lies in (0, 1], keeping the log finite
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def gaussian_array(self, shape):
        n = int(np.prod(shape))
        return np.array([self.gaussian() for _ in range(n)], dtype=np.float64).reshape(shape)

    def randbelow(self, n):
        """Integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("randbelow: n must be positive")
        return int(self.uniform01() * n)

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def categorical(self, probs):
        """Index drawn from a probability vector by inverse CDF."""
        u = self.uniform01()
        acc = 0.0
        for i, p in enumerate(probs):
            acc += p
            if u < acc:
                return i
        return len(probs) - 1

    def spawn(self):
        """Independent child generator seeded from this stream."""
        return Rng(self.next_u64())
