"""Counter-based, splittable random streams.

A stream is a 64-bit key; its ``t``-th uniform is a pure function of
``(key, t)`` (SplitMix64 output function applied to ``key + (t+1)·φ``).
Substreams are derived by hashing ``(key, index)``, so draws depend only on
the seed and the position in the sample/step lattice, never on how work is
split across threads.

Compiled functions return keys to Python as plain ints; every entry point
casts back to uint64 so a key below 2**63 is never treated as signed.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SPLIT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def substream(key, index):
    """Key of substream ``index`` of stream ``key``."""
    return mix64(np.uint64(key) ^ mix64((np.uint64(index) + _ONE) * _SPLIT))


@njit(cache=True)
def uniform(key, counter):
    """The ``counter``-th uniform in [0, 1) of stream ``key``."""
    z = mix64(np.uint64(key) + (np.uint64(counter) + _ONE) * _GOLDEN)
    return float(z >> _S11) * _INV53


def seed_key(seed: int) -> np.uint64:
    """Root stream key of an integer seed (any size; reduced mod 2**64)."""
    return np.uint64(mix64(np.uint64((int(seed) + int(_GOLDEN)) % (1 << 64))))


class Stream:
    """Sequential view of one stream, for scalar Python loops."""

    def __init__(self, key):
        self.key = np.uint64(key)
        self.counter = 0

    @classmethod
    def from_seed(cls, seed, *path):
        key = seed_key(seed)
        for i in path:
            key = np.uint64(substream(key, np.uint64(i)))
        return cls(key)

    def split(self, index) -> "Stream":
        return Stream(np.uint64(substream(self.key, np.uint64(index))))

    def random(self) -> float:
        u = uniform(self.key, np.uint64(self.counter))
        self.counter += 1
        return u

    def choice_index(self, probs) -> int:
        """Inverse-CDF draw of an index from ``probs`` (document order)."""
        return pick(probs, self.random())


def pick(probs, u) -> int:
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1
