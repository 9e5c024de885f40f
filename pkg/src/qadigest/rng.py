"""Deterministic, cross-language-reproducible randomness.

Every randomized stage in the toolkit draws from a splitmix64 generator so
that splits, seed sampling, and training shuffles can be replayed exactly
from a single master seed, independent of the host platform's RNG.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """splitmix64 with the published constants."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def next_below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < threshold:
                return x % bound

    def next_float(self) -> float:
        # 53 high bits -> uniform in [0, 1)
        return (self.next_u64() >> 11) / float(1 << 53)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        """k distinct elements, uniform without replacement (partial Fisher-Yates)."""
        n = len(items)
        if k > n:
            raise ValueError(f"cannot sample {k} from {n} items")
        pool = list(items)
        for i in range(k):
            j = i + self.next_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def derive_seed(seed: int, label: str) -> int:
    """Derive a per-stage child seed from a master seed and a stage label.

    Folds the label bytes through the splitmix64 finalizer so distinct
    labels give independent streams.
    """
    x = _mix((seed + _GOLDEN) & _MASK)
    for b in label.encode("utf-8"):
        x = _mix((x + (b + 1) * _GOLDEN) & _MASK)
    return x
