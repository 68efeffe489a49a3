"""Path-addressed random streams on top of the Philox4x64-10 counter generator.

A stream is identified by ``(seed, path)`` where ``path`` holds up to three
non-negative integers.  The seed is the Philox key and the path occupies the
three high counter words, so the low word counts draws within the stream and
distinct paths can never overlap.  Draws inside a stream are consumed in a
fixed documented layout, which makes every value a function of its index path
alone, whatever the order in which streams are visited.

Variates are derived from the raw 64-bit outputs with fixed formulas:

* uniform: ``((r >> 12) + 0.5) * 2**-52``, strictly inside (0, 1)
* normal: ``ndtri(uniform)`` (inverse CDF)
* index in ``[0, n)``: ``min(floor(uniform * n), n - 1)``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK = (1 << 64) - 1
_SHIFT = np.uint64(12)
_SCALE = 2.0**-52

# first path element: what the stream is used for
DATA = 1
BOOT_PB = 2
BOOT_NB = 3
RESAMPLE = 4
TEST = 5


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if len(self.path) > 3 or any(int(p) < 0 or int(p) > _MASK for p in self.path):
            raise ValueError(f"invalid stream path {self.path!r}")

    def child(self, *idx: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in idx))

    def draws(self) -> "Draws":
        words = list(self.path) + [0] * (3 - len(self.path))
        # counter = [position, path[2], path[1], path[0]]
        counter = [0, words[2], words[1], words[0]]
        key = [int(self.seed), len(self.path)]
        return Draws(np.random.Philox(counter=counter, key=key))


class Draws:
    """Sequential consumer of one stream."""

    __slots__ = ("_bg",)

    def __init__(self, bitgen: np.random.Philox):
        self._bg = bitgen

    def raw(self, size) -> np.ndarray:
        n = int(np.prod(size))
        return self._bg.random_raw(n).reshape(size)

    def uniform(self, size) -> np.ndarray:
        u = (self.raw(size) >> _SHIFT).astype(np.float64)
        u += 0.5
        u *= _SCALE
        return u

    def normal(self, size) -> np.ndarray:
        return ndtri(self.uniform(size))

    def index(self, n, size) -> np.ndarray:
        """Indices uniform on ``[0, n)``; ``n`` may broadcast against ``size``."""
        u = self.uniform(size)
        u *= n
        idx = u.astype(np.int64)
        # u * n can round up to n in the last ulp
        np.minimum(idx, np.asarray(n) - 1, out=idx)
        return idx
