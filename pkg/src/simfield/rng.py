"""Pinned 64-bit PRNG for reproducible randomized controls.

The permutation control must produce bit-identical p-values across runs,
platforms, and degrees of parallelism, so the generator is fixed rather
than delegated to a library default: xoshiro256** state words come from a
SplitMix64 stream over the master seed. Replicate r draws its four state
words from SplitMix64 outputs 4r..4r+3, which are random-access
(output k mixes ``seed + (k+1) * GOLDEN``), so any execution order yields
the same substreams.
"""

from __future__ import annotations

from .errors import PoolTooSmall

__all__ = ["splitmix64_at", "Xoshiro256StarStar", "substream", "sample_pair_indices"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_at(seed: int, k: int) -> int:
    """The k-th output (0-based) of the SplitMix64 stream seeded with ``seed``."""
    z = (seed + (k + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** with explicit 4-word state."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, s0: int, s1: int, s2: int, s3: int):
        if not (s0 or s1 or s2 or s3):
            raise ValueError("xoshiro256** state must not be all zero")
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3

    def next_u64(self) -> int:
        result = (_rotl((self.s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (self.s1 << 17) & _MASK
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    def next_below(self, bound: int) -> int:
        """Uniform draw in [0, bound) by modulo reduction.

        The modulo bias is below 2**-50 for any desk-scale bound and is
        accepted in exchange for a trivially portable reduction.
        """
        return self.next_u64() % bound


def substream(seed: int, replicate: int) -> Xoshiro256StarStar:
    """Independent generator for one replicate of a seeded experiment."""
    base = 4 * replicate
    return Xoshiro256StarStar(
        splitmix64_at(seed, base),
        splitmix64_at(seed, base + 1),
        splitmix64_at(seed, base + 2),
        splitmix64_at(seed, base + 3),
    )


def sample_pair_indices(rng: Xoshiro256StarStar, pool_size: int, k: int) -> list[int]:
    """Sample k distinct indices from range(pool_size) by a partial
    Fisher-Yates shuffle, consuming exactly k draws."""
    if k > pool_size:
        raise PoolTooSmall(f"cannot sample {k} pairs from a pool of {pool_size}")
    idx = list(range(pool_size))
    for t in range(k):
        j = t + rng.next_below(pool_size - t)
        idx[t], idx[j] = idx[j], idx[t]
    return idx[:k]
