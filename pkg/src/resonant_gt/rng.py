"""Portable xoshiro256** generator.

Every random draw in the package (synthetic datasets, initial network states)
goes through this generator so results are identical across platforms and can
be reproduced from another language with the reference C code:

* state seeding: four successive splitmix64 outputs starting from ``seed``;
* stream ``k``: the seeded state advanced by ``k`` calls to ``jump()``
  (each jump is 2**128 steps), so streams never overlap in practice;
* ``random()``: ``(next_u64() >> 11) * 2**-53`` in [0, 1);
* ``normal()``: Box-Muller on ``u1 = 1 - random()``, ``u2 = random()``,
  returning ``sqrt(-2 ln u1) * cos(2 pi u2)`` (one variate per pair).
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_JUMP = (0x180EC6D33CFD0ABA, 0xD5A61266F0C9392C, 0xA9582618E03FC9AA, 0x39ABDC4529B1661C)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


class Xoshiro256:
    def __init__(self, seed: int = 0, stream: int = 0, *, state=None):
        if state is not None:
            s = [int(v) & _MASK for v in state]
            if len(s) != 4 or not any(s):
                raise ValueError("xoshiro256 state must be four words, not all zero")
            self._s = s
        else:
            x = int(seed) & _MASK
            s = []
            for _ in range(4):
                x, out = splitmix64(x)
                s.append(out)
            self._s = s
        for _ in range(int(stream)):
            self.jump()

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def jump(self) -> None:
        acc = [0, 0, 0, 0]
        for word in _JUMP:
            for b in range(64):
                if word & (1 << b):
                    acc = [a ^ s for a, s in zip(acc, self._s)]
                self.next_u64()
        self._s = acc

    def random(self, size=None):
        if size is None:
            return (self.next_u64() >> 11) * (1.0 / (1 << 53))
        n = int(np.prod(size))
        out = np.fromiter(
            ((self.next_u64() >> 11) * (1.0 / (1 << 53)) for _ in range(n)),
            dtype=float,
            count=n,
        )
        return out.reshape(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        u = self.random(size)
        return low + (high - low) * u

    def normal(self, size=None):
        if size is None:
            return self._one_normal()
        n = int(np.prod(size))
        out = np.fromiter((self._one_normal() for _ in range(n)), dtype=float, count=n)
        return out.reshape(size)

    def _one_normal(self) -> float:
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def integers(self, n: int, size=None):
        """Uniform integers in [0, n) by ``floor(random() * n)``."""
        if size is None:
            return min(int(self.random() * n), n - 1)
        return np.minimum((self.random(size) * n).astype(np.int64), n - 1)
