"""Portable seeded randomness for synthetic fixtures and random partitions.

All randomness in the package reduces to the splitmix64 generator in counter
mode, so any implementation in any language can reproduce the exact streams:

* stream value i (i = 0, 1, ...) for seed ``s`` is ``mix64(s + (i+1)*GOLDEN)``
  where ``mix64`` is the splitmix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15,
  all arithmetic mod 2**64;
* derived streams fold a tag into the seed: ``child = mix64(seed ^ mix64(tag))``;
* uniform doubles take the top 53 bits: ``(x >> 11) * 2**-53`` in [0, 1);
* standard normals come from Box-Muller on consecutive uniform pairs
  (u1 = 1 - u maps into (0, 1] so the log is finite); outputs are interleaved
  ``r*cos, r*sin`` and the pair stream is truncated to the requested length;
* bounded integers use the multiply-shift map ``(x * n) >> 64``;
* k-subsets are drawn with a partial Fisher-Yates pass over [0, n), one
  bounded draw per slot, and both sides are reported in ascending order.

Box-Muller goes through libm's log/cos/sin, so normals are bit-stable on one
platform; the integer streams are bit-stable everywhere.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

_TWO_NEG_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, *tags: int) -> int:
    """Derive a child stream seed by folding tags into the parent seed."""
    s = seed & _MASK
    for tag in tags:
        s = mix64(s ^ mix64(tag))
    return s


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-mode splitmix64 stream; draws advance the counter."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN) & _MASK)

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw values as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        return _mix64_array(np.uint64(self.seed) + idx * np.uint64(GOLDEN))

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` doubles in [0, 1)."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normals (float64) via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:n]

    def below(self, n: int) -> int:
        """Next bounded integer in [0, n)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return (self.next_u64() * n) >> 64


def sample_k(stream: SplitMix64, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw a k-subset of [0, n); returns (chosen, rest), each sorted ascending.

    Consumes exactly k draws (partial Fisher-Yates), regardless of outcome.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} of {n}")
    pool = list(range(n))
    for i in range(k):
        j = i + stream.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    chosen = np.sort(np.asarray(pool[:k], dtype=np.int64))
    rest = np.sort(np.asarray(pool[k:], dtype=np.int64))
    return chosen, rest
