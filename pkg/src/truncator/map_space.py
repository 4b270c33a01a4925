"""Predicates, distinguished subsets and generators over the space of maps."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .algebra import ShufflingMap
from .exceptions import CapacityError, DomainError
from .validation import check_element, check_int, check_n_bits, check_size_power_of_two

__all__ = [
    "MapClassification",
    "kernel",
    "image",
    "is_surjective",
    "is_homomorphism_circ",
    "is_homomorphism_star",
    "is_star_commutative",
    "delta_set",
    "predicted_period",
    "predicted_periods",
    "period_clauses",
    "classify",
    "enumerate_all_maps",
    "map_batches",
    "sample_homomorphism",
    "all_homomorphisms",
]

#: Pairwise predicates scan M**2 pairs; refuse beyond this M.
MAX_PAIRWISE_SIZE = 1 << 12
#: Exhaustive enumeration is free up to this M and needs ``expensive=True`` up to 8.
FREE_ENUMERATION_SIZE = 4
EXPENSIVE_ENUMERATION_SIZE = 8


def _masks(phi: ShufflingMap) -> np.ndarray:
    return phi.masks.astype(np.int64)


def _labels(masks: np.ndarray) -> frozenset[int]:
    return frozenset((np.asarray(masks, dtype=np.int64) + 1).tolist())


def kernel(phi: ShufflingMap, k: int = 1) -> frozenset[int]:
    """``{g : phi^(k)(g) = 1}``."""
    k = check_int(k, "k", minimum=1)
    t = _masks(phi)
    values = np.arange(phi.size, dtype=np.int64)
    for _ in range(k):
        values = t[values]
    return _labels(np.flatnonzero(values == 0))


def image(phi: ShufflingMap) -> frozenset[int]:
    return _labels(np.unique(phi.masks))


def is_surjective(phi: ShufflingMap) -> bool:
    return np.unique(phi.masks).size == phi.size


def _pair_grid(phi: ShufflingMap) -> tuple[np.ndarray, np.ndarray]:
    if phi.size > MAX_PAIRWISE_SIZE:
        raise CapacityError(f"pairwise check needs M <= {MAX_PAIRWISE_SIZE}, got M={phi.size}")
    r = np.arange(phi.size, dtype=np.int64)
    return r[:, None], r[None, :]


def is_homomorphism_circ(phi: ShufflingMap) -> bool:
    """``phi(a circ b) = phi(a) circ phi(b)`` for every pair."""
    a, b = _pair_grid(phi)
    t = _masks(phi)
    return bool(np.all(t[a ^ b] == (t[a] ^ t[b])))


def is_homomorphism_star(phi: ShufflingMap) -> bool:
    """``phi(a * b) = phi(a) * phi(b)`` for every pair."""
    a, b = _pair_grid(phi)
    t = _masks(phi)
    return bool(np.all(t[a ^ t[b]] == (t[a] ^ t[t[b]])))


def is_star_commutative(phi: ShufflingMap) -> bool:
    """Whether ``a * b = b * a`` for all pairs.

    Computed by the pair scan and cross-checked against the equivalent
    statement that ``T`` is a constant map; a disagreement would mean a bug
    and raises ``AssertionError``.
    """
    a, b = _pair_grid(phi)
    t = _masks(phi)
    by_pairs = bool(np.all((a ^ t[b]) == (b ^ t[a])))
    step = phi.step_masks()
    by_step = bool(np.all(step == step[0]))
    if by_pairs != by_step:
        raise AssertionError(f"commutativity characterizations disagree for {phi!r}")
    return by_pairs


def delta_set(phi: ShufflingMap) -> frozenset[int]:
    """``{g : g * g = phi(phi(g))}``, i.e. ``g circ phi(g) = phi^2(g)``."""
    t = _masks(phi)
    r = np.arange(phi.size, dtype=np.int64)
    return _labels(np.flatnonzero((r ^ t) == t[t]))


def period_clauses(t: np.ndarray) -> dict[str, np.ndarray]:
    """Hypotheses and memberships of the period classification, per element.

    ``t`` holds map tables as masks with shape ``(..., M)``; every returned
    array has the same shape.  ``"predicted"`` is 1, 2 or 3 for the first
    clause that applies and 0 where none does.
    """
    t = np.asarray(t, dtype=np.int64)
    size = t.shape[-1]
    g = np.broadcast_to(np.arange(size, dtype=np.int64), t.shape)

    def at(x):
        return np.take_along_axis(t, x, axis=-1)

    def comm(x, y):
        return at(x ^ y) ^ at(x) ^ at(y)

    f1 = t
    f2 = at(f1)
    f3 = at(f2)
    phi_one_fixed = np.broadcast_to(t[..., :1] == 0, t.shape)
    hyp2 = phi_one_fixed & (comm(g, f1) == 0)
    hyp3 = hyp2 & (comm(g, f2) == 0)
    in_ker = f1 == 0
    # phi(g) lies in Im phi by construction; delta membership is phi(g) circ phi^2(g) = phi^3(g)
    member2 = (f2 == 0) & ~in_ker
    member3 = ((f1 ^ f2) == f3) & ~in_ker

    predicted = np.zeros(t.shape, dtype=np.int8)
    predicted[hyp3 & member3] = 3
    predicted[hyp2 & member2] = 2
    predicted[in_ker] = 1
    return {
        "predicted": predicted,
        "in_kernel": in_ker,
        "hypotheses_2": hyp2,
        "hypotheses_3": hyp3,
        "member_2": member2,
        "member_3": member3,
    }


def predicted_period(g: int, phi: ShufflingMap) -> int | None:
    """Period asserted by the classification theorem for ``g``, or ``None``.

    Clauses are tried in order: ``g in ker phi`` gives 1; given
    ``[g, phi(g)] = 1`` and ``phi(1) = 1``, ``g in ker phi^2 \\ ker phi``
    gives 2; given additionally ``[g, phi^2(g)] = 1``,
    ``phi(g) in delta`` with ``g`` outside ``ker phi`` gives 3.
    """
    g = check_element(g, phi.n_bits)
    value = int(period_clauses(phi.masks)["predicted"][g - 1])
    return value or None


def predicted_periods(phi: ShufflingMap) -> np.ndarray:
    """Array of predictions for every element, 0 where no clause applies."""
    return period_clauses(phi.masks)["predicted"]


@dataclass(frozen=True)
class MapClassification:
    is_circ_homomorphism: bool
    is_star_homomorphism: bool
    is_star_commutative: bool
    kernel: frozenset[int]
    kernel2: frozenset[int]
    image: frozenset[int]
    delta_set: frozenset[int]
    fixed_unique_attractor: int | None


def classify(phi: ShufflingMap) -> MapClassification:
    commutative = is_star_commutative(phi)
    ker = kernel(phi, 1)
    unique = None
    if commutative:
        # every state lands on the same element in one step
        unique = int(phi.step_masks()[0]) + 1
    return MapClassification(
        is_circ_homomorphism=is_homomorphism_circ(phi),
        is_star_homomorphism=is_homomorphism_star(phi),
        is_star_commutative=commutative,
        kernel=ker,
        kernel2=kernel(phi, 2),
        image=image(phi),
        delta_set=delta_set(phi),
        fixed_unique_attractor=unique,
    )


def _check_enumerable(size: int, expensive: bool) -> int:
    n_bits = check_size_power_of_two(size)
    if size > EXPENSIVE_ENUMERATION_SIZE:
        raise CapacityError(f"cannot enumerate all {size}**{size} maps")
    if size > FREE_ENUMERATION_SIZE and not expensive:
        raise CapacityError(f"enumerating all {size}**{size} maps requires expensive=True")
    return n_bits


def map_batches(
    size: int,
    batch_size: int = 1 << 18,
    start: int = 0,
    stop: int | None = None,
    expensive: bool = False,
) -> Iterator[np.ndarray]:
    """Yield all maps on ``G`` of order ``size`` as ``(batch, size)`` mask arrays.

    Map number ``i`` in lexicographic order has ``phi(1)`` as its most
    significant base-``size`` digit.  ``start``/``stop`` select a sub-range so
    sweeps can be split across workers.
    """
    _check_enumerable(size, expensive)
    total = size**size
    stop = total if stop is None else min(stop, total)
    place = size ** np.arange(size - 1, -1, -1, dtype=np.int64)
    for lo in range(start, stop, batch_size):
        idx = np.arange(lo, min(lo + batch_size, stop), dtype=np.int64)
        yield ((idx[:, None] // place) % size).astype(np.uint8)


def enumerate_all_maps(size: int, expensive: bool = False) -> Iterator[ShufflingMap]:
    """Every map on ``G`` of order ``size`` in lexicographic order of the label table."""
    n_bits = _check_enumerable(size, expensive)
    for batch in map_batches(size, expensive=expensive):
        for row in batch:
            yield ShufflingMap(n_bits, row)


def sample_homomorphism(n_bits: int, rng: np.random.Generator, matrix=None) -> ShufflingMap:
    """A uniformly random group homomorphism, i.e. a random N x N binary matrix.

    Pass ``matrix`` to build the homomorphism of a specific matrix instead.
    """
    n_bits = check_n_bits(n_bits)
    if matrix is None:
        matrix = rng.integers(0, 2, size=(n_bits, n_bits))
    elif np.shape(matrix) != (n_bits, n_bits):
        raise DomainError(f"matrix must have shape ({n_bits}, {n_bits})")
    phi = ShufflingMap.from_matrix(np.asarray(matrix).reshape(n_bits, n_bits))
    if n_bits <= 12:
        assert is_homomorphism_circ(phi)
    return phi


def all_homomorphisms(n_bits: int) -> Iterator[ShufflingMap]:
    """All ``2**(N*N)`` homomorphisms of the group with ``N = n_bits``."""
    n_bits = check_n_bits(n_bits, cap=4)
    for bits in itertools.product((0, 1), repeat=n_bits * n_bits):
        yield ShufflingMap.from_matrix(np.array(bits).reshape(n_bits, n_bits))
