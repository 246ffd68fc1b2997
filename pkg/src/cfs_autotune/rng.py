"""Project-wide deterministic PRNG.

A single named generator (SplitMix64, a shift/multiply design) is used for
every randomized component so that results are reproducible bit-for-bit
across platforms and Python versions. Parallel components (PSO particles,
design rows, comparison seeds) draw from child streams derived from the
master seed, so results do not depend on evaluation order.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Seedable SplitMix64 stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def spawn(self, index: int) -> "SplitMix64":
        """Derive an independent child stream; stable in `index`.

        Derivation uses the current state without advancing it, so spawn
        children before drawing from the parent if both are needed.
        """
        return SplitMix64(mix64(self._state ^ mix64(index + 1)))


def child_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit child seed for component `index` of a master seed."""
    return mix64((master_seed & MASK64) ^ mix64(index + 1))
