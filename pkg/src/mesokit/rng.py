"""Portable seeded PRNG used for centroid sampling.

The generator is fully specified here so any implementation can reproduce
the exact centroid choice for a given seed:

* state init: ``state = splitmix64(seed)`` (one splitmix64 step on the seed
  taken mod 2**64); a zero state is replaced by ``0x9E3779B97F4A7C15``.
* step (xorshift64*): ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27`` (all mod
  2**64), output ``x * 0x2545F4914F6CDD1D mod 2**64``.
* bounded draw in ``[0, n)``: ``(next() * n) >> 64``.
* sampling ``n_out`` of ``N`` without replacement: a partial Fisher-Yates
  shuffle of ``[0, 1, ..., N-1]``; for ``i`` in ``0..n_out-1`` swap slot ``i``
  with slot ``i + bounded(N - i)``; the result is slots ``0..n_out-1``.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def bounded(self, n: int) -> int:
        return (self.next_u64() * n) >> 64


def sample_without_replacement(n: int, n_out: int, seed: int) -> list[int]:
    if not 1 <= n_out <= n:
        raise ValueError(f"cannot sample {n_out} of {n} items")
    rng = XorShift64Star(seed)
    slots = list(range(n))
    for i in range(n_out):
        j = i + rng.bounded(n - i)
        slots[i], slots[j] = slots[j], slots[i]
    return slots[:n_out]
