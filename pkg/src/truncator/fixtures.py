"""Small named maps used in docs, tests and the CLI examples."""

from __future__ import annotations

from .algebra import ShufflingMap

# Every element squares to 4: T is constant, 4 is the only fixed point.
COMPLEX_LABELS = (4, 3, 2, 1)


def complex_map() -> ShufflingMap:
    return ShufflingMap.from_labels(COMPLEX_LABELS)


def identity_map(n_bits: int) -> ShufflingMap:
    return ShufflingMap.identity(n_bits)
