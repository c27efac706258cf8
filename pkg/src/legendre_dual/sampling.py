"""Deterministic point sampling.

Reproducibility across machines and thread counts is a hard requirement for
the verifier, so sampling is built on an explicit SplitMix64 generator with
pinned constants rather than a platform RNG:

* state update: ``state += 0x9E3779B97F4A7C15`` (mod 2**64)
* output mix:   ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
  z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31``
* float in [0, 1): ``(z >> 11) * 2.0**-53``

A :class:`SamplePlan` names a count, a seed, and an axis-aligned box; point
``k`` draws its coordinates in axis order from one continuous stream, so the
full sequence is a pure function of (count, seed, box).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = ["SplitMix64", "SamplePlan", "sample_points"]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 pseudo-random stream with pinned constants."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_uint64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        z = z ^ (z >> 31)
        return z

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * 2.0 ** -53

    def next_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


@dataclass(frozen=True)
class SamplePlan:
    """A reproducible batch of points in an axis-aligned box.

    ``box`` holds one (lo, hi) pair per coordinate, in coordinate order.
    """

    count: int
    seed: int
    box: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be non-negative")
        for lo, hi in self.box:
            if not (lo <= hi):
                raise ValueError(f"empty box axis [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.box)

    def points(self) -> Iterator[np.ndarray]:
        rng = SplitMix64(self.seed)
        for _ in range(self.count):
            yield np.array(
                [rng.next_in(lo, hi) for lo, hi in self.box], dtype=float
            )


def sample_points(plan: SamplePlan) -> list[np.ndarray]:
    """Materialize the plan's full point sequence."""
    return list(plan.points())


def make_plan(
    count: int, seed: int, box: Sequence[Sequence[float]]
) -> SamplePlan:
    """Convenience constructor accepting plain nested sequences."""
    return SamplePlan(
        count=count,
        seed=seed,
        box=tuple((float(lo), float(hi)) for lo, hi in box),
    )
