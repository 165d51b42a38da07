"""Deterministic random streams for genome sampling, GA draws and weight init.

Every draw is the first output of a xoshiro256** instance whose four state
words are taken from the splitmix64 stream of (seed, counter).  Because each
counter owns its own instance, draw i never depends on draws j < i, so chunked
or parallel generation produces bit-identical results to serial generation.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 output finalizer on uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    return z ^ (z >> np.uint64(31))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def splitmix64_word(seed: int, k: np.ndarray) -> np.ndarray:
    """k-th output of the splitmix64 stream seeded with `seed` (vectorized)."""
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    step = (np.asarray(k, dtype=np.uint64) + np.uint64(1)) * np.uint64(_SM_GAMMA)
    return _mix64(base + step)


def stream_u64(seed: int, start: int, count: int) -> np.ndarray:
    """`count` draws at counters start..start+count-1, one u64 each.

    Draw i is the first xoshiro256** output of the instance whose state is
    splitmix64 words 4i..4i+3 of `seed`; that output reads only state word
    s[1], so only word 4i+1 is materialized.
    """
    idx = np.arange(start, start + count, dtype=np.uint64)
    s1 = splitmix64_word(seed, idx * np.uint64(4) + np.uint64(1))
    return _rotl(s1 * np.uint64(5), 7) * np.uint64(9)


def u64_to_bits(words: np.ndarray) -> np.ndarray:
    """(n,) uint64 -> (n, 64) uint8, most significant bit first."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words[:, None].astype(">u8").view(np.uint8).reshape(len(words), 8)
    return np.unpackbits(as_bytes, axis=1)


def bits_to_u64(bits: np.ndarray) -> np.ndarray:
    """(n, 64) 0/1 -> (n,) uint64, inverse of u64_to_bits."""
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), axis=1)
    return packed.view(">u8").reshape(-1).astype(np.uint64)


class Xoshiro256StarStar:
    """Reference scalar xoshiro256** (exact-integer arithmetic).

    Used by tests to cross-check the vectorized counter path; the vectorized
    path must equal the first next() of an instance seeded the same way.
    """

    def __init__(self, seed: int, first_word: int = 0):
        m = (1 << 64) - 1
        self.s = []
        state = seed & m
        for k in range(first_word, first_word + 4):
            z = (state + (k + 1) * _SM_GAMMA) & m
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & m
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & m
            self.s.append(z ^ (z >> 31))

    def next_u64(self) -> int:
        m = (1 << 64) - 1
        s = self.s
        x = (s[1] * 5) & m
        result = (((x << 7) | (x >> 57)) & m) * 9 & m
        t = (s[1] << 17) & m
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = ((s[3] << 45) | (s[3] >> 19)) & m
        return result


class CounterRng:
    """Stateful façade over stream_u64: one seed, a moving counter."""

    def __init__(self, seed: int, start: int = 0):
        self.seed = int(seed)
        self.counter = int(start)

    def u64(self, n: int) -> np.ndarray:
        out = stream_u64(self.seed, self.counter, n)
        self.counter += n
        return out

    def random(self, n: int) -> np.ndarray:
        """float64 in [0, 1), 53-bit resolution."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, n: int, low: float, high: float) -> np.ndarray:
        return low + (high - low) * self.random(n)

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n unbiased integers in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) // bound) * bound
        out = self.u64(n)
        bad = out >= np.uint64(threshold & ((1 << 64) - 1)) if threshold < (1 << 64) else np.zeros(n, bool)
        while bad.any():
            out[bad] = self.u64(int(bad.sum()))
            bad = out >= np.uint64(threshold)
        return (out % np.uint64(bound)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) (stable argsort of u64 keys)."""
        return np.argsort(self.u64(n), kind="stable")
