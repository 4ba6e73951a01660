"""Counter-based 64-bit random streams.

Output ``i`` of a stream with key ``k`` is ``mix64(k + (i + 1) * GOLDEN)``,
which is exactly SplitMix64 seeded with ``k``.  Because every output is a
pure function of ``(key, counter)``, substreams for parallel trials are
derived as ``seed ^ mix64(trial)`` and never share state.

Test vectors (key 0): ``0xE220A8397B1DCDAF``, ``0x6E789E6AA1B965F4``,
``0x06C45D188009454F``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_GOLDEN = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_INV53 = 1.0 / 9007199254740992.0


def mix64(x: int) -> int:
    """SplitMix64 finalizer on Python ints."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def substream_key(seed: int, index: int) -> int:
    return (seed & MASK64) ^ mix64(index)


@numba.njit(cache=True, nogil=True)
def nb_mix64(x):
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


@numba.njit(cache=True, nogil=True)
def nb_next(key, ctr):
    """Return (output, new_counter) for a uint64 key and counter."""
    # explicit casts: mixing int64 into uint64 arithmetic would promote to float
    ctr = np.uint64(ctr) + _ONE
    return nb_mix64(np.uint64(key) + ctr * _GOLDEN), ctr


@numba.njit(cache=True, nogil=True)
def nb_below(key, ctr, k):
    """Unbiased integer in [0, k) by threshold rejection; k >= 1."""
    ku = np.uint64(k)
    threshold = (_ZERO - ku) % ku
    while True:
        x, ctr = nb_next(key, ctr)
        if x >= threshold:
            return np.int64(x % ku), ctr


@numba.njit(cache=True, nogil=True)
def nb_key(seed, index):
    return np.uint64(seed) ^ nb_mix64(np.uint64(index))


@dataclass
class Rng:
    """A seeded stream: the key plus the number of outputs consumed so far."""

    seed: int
    counter: int = 0

    @property
    def key(self) -> int:
        return self.seed & MASK64

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.key + self.counter * GOLDEN) & MASK64)

    def below(self, k: int) -> int:
        if k < 1:
            raise ValueError("bound must be positive")
        threshold = (-k) % (1 << 64) % k
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % k

    def random(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def substream(self, index: int) -> "Rng":
        return Rng(substream_key(self.key, index))

    # kernel interop: numba functions take and return raw uint64 state
    def state(self) -> tuple[np.uint64, np.uint64]:
        return np.uint64(self.key), np.uint64(self.counter)

    def advance_to(self, counter) -> None:
        self.counter = int(counter)
