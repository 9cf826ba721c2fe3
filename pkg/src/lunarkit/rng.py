"""Deterministic 64-bit PRNG for reproducible dataset splits.

The split shuffle must be reproducible across implementations and
platforms, so the generator is pinned to a named, publicly specified
algorithm rather than any runtime's default: xoshiro256** by David Blackman
and Sebastiano Vigna (public domain, https://prng.di.unimi.it/), seeded by
four successive outputs of splitmix64 (Vigna's recommended seeding).

Pinned constants:
  splitmix64: gamma 0x9E3779B97F4A7C15,
              mixers 0xBF58476D1CE4E5B9 (shift 30), 0x94D049BB133111EB (27),
              final shift 31.
  xoshiro256**: output rotl(s1 * 5, 7) * 9; state update t = s1 << 17,
              s2^=s0, s3^=s1, s1^=s2, s0^=s3, s2^=t, s3 = rotl(s3, 45).
  shuffle:    Fisher-Yates from the top, j = next_u64() % (i + 1).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64_stream(seed: int):
    """Infinite splitmix64 output stream from a 64-bit seed."""
    x = seed & _MASK64
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** seeded from splitmix64; splittable via distinct seeds."""

    def __init__(self, seed: int):
        stream = splitmix64_stream(seed)
        self._s = [next(stream) for _ in range(4)]

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates using the pinned index rule."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]
