"""Counter-based 64-bit PRNG shared by the simulator and the harness.

The generator is SplitMix64 used in counter mode: the value at index ``i``
of the stream with seed ``s`` is ``mix64(s + (i + 1) * GOLDEN_GAMMA)`` with
the standard SplitMix64 finalizer.  Any implementation in any language can
reproduce the streams from this definition; the simulator kernels carry an
equivalent copy compiled with numba.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13, the reference one)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def stream_value(seed: int, index: int) -> int:
    """Value ``index`` (0-based) of the counter stream with the given seed."""
    return mix64((seed + ((index + 1) * GOLDEN_GAMMA)) & MASK64)


def substream_seed(seed: int, lane: int) -> int:
    """Derive an independent lane (e.g. one per thread) from a master seed."""
    return mix64((seed ^ mix64(lane + 1)) & MASK64)


def u01(word: int) -> float:
    """Map a 64-bit word to [0, 1) with 53 random bits."""
    return (word >> 11) * (1.0 / (1 << 53))


def geometric_height(word: int, h_max: int) -> int:
    """Count of leading coin-flip successes from the word's low bits.

    P(h) = 2^-(h+1) for h < h_max, remainder mass at h_max.
    """
    h = 0
    while h < h_max and (word >> h) & 1:
        h += 1
    return h
