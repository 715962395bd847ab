"""Portable deterministic PRNG: splitmix64-seeded xoshiro256**.

Event streams, fill values and corpus synthesis all draw from this
generator so a 64-bit seed reproduces a run bit-for-bit, independent of
the host language or its standard library.
"""

from __future__ import annotations

from typing import Iterator, Sequence, TypeVar

MASK64 = (1 << 64) - 1

_ALNUM = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"

T = TypeVar("T")


def splitmix64_stream(seed: int) -> Iterator[int]:
    """Yield the splitmix64 sequence for ``seed``."""
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield (z ^ (z >> 31)) & MASK64


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** with its state seeded from splitmix64.

    This is the reference construction: four splitmix64 outputs make up
    the initial 256-bit state, so any implementation of the same pair of
    algorithms produces identical streams for the same seed.
    """

    def __init__(self, seed: int):
        sm = splitmix64_stream(seed)
        self._s = [next(sm), next(sm), next(sm), next(sm)]

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def randrange(self, n: int) -> int:
        """Unbiased draw from [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        span = MASK64 + 1
        limit = span - (span % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randrange(len(seq))]

    def percent(self) -> int:
        """Integer in [0, 100), for percentage mix decisions."""
        return self.randrange(100)

    def alnum(self, length: int) -> str:
        return "".join(self.choice(_ALNUM) for _ in range(length))


def derive_seed(seed: int, label: str) -> int:
    """Stable sub-seed for an independent named stream.

    Folds the label via FNV-1a and scrambles with one splitmix64 step,
    so sub-streams do not depend on iteration order elsewhere.
    """
    h = 0xCBF29CE484222325
    for b in label.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return next(splitmix64_stream((seed & MASK64) ^ h))
