"""Group arithmetic on quadrant labels and the shuffling-map operations.

Elements of ``G = {1, ..., M}``, ``M = 2**N``, are handled as plain 1-based
``int`` labels.  Internally label ``g`` is the bitmask ``g - 1`` in which bit
``i - 1`` is set exactly when coordinate ``i`` is negative, so the group
operation ``circ`` is XOR of masks and label 1 (the all-plus quadrant) is the
identity.

A :class:`ShufflingMap` holds a dense table ``phi(g)`` and defines the
dynamics ``T(g) = g * g = g circ phi(g)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError
from .validation import MAX_TABLE_BITS, check_element, check_int, check_n_bits

__all__ = [
    "ShufflingMap",
    "circ",
    "quadrant_encode",
    "quadrant_decode",
    "star",
    "truncator_step",
    "star_power",
    "phi_iterate",
    "commutator",
    "gamma",
    "gamma_row",
    "poly_eval",
    "gast4_rhs",
]


def _mask_dtype(n_bits: int):
    return np.uint8 if n_bits <= 8 else (np.uint16 if n_bits <= 16 else np.uint32)


@dataclass(frozen=True, eq=False)
class ShufflingMap:
    """A total function ``phi: G -> G`` stored as a table of 0-based masks.

    Use :meth:`from_labels` to build one from the 1-based table
    ``[phi(1), ..., phi(M)]``.
    """

    n_bits: int
    masks: np.ndarray = field(repr=False)

    def __post_init__(self):
        n_bits = check_n_bits(self.n_bits, MAX_TABLE_BITS)
        masks = np.asarray(self.masks)
        size = 1 << n_bits
        if masks.shape != (size,):
            raise DomainError(f"map table must have length 2**{n_bits} = {size}, got shape {masks.shape}")
        if masks.size and (masks.min() < 0 or masks.max() >= size):
            bad = int(np.flatnonzero((masks < 0) | (masks >= size))[0])
            raise DomainError(f"phi({bad + 1}) = {int(masks[bad]) + 1} is outside [1, {size}]")
        masks = masks.astype(_mask_dtype(n_bits), copy=True)
        masks.setflags(write=False)
        object.__setattr__(self, "n_bits", n_bits)
        object.__setattr__(self, "masks", masks)

    @classmethod
    def from_labels(cls, labels: Sequence[int], n_bits: int | None = None) -> "ShufflingMap":
        labels = list(labels)
        if n_bits is None:
            n_bits = max(len(labels), 1).bit_length() - 1
            if len(labels) != 1 << n_bits:
                raise DomainError(f"map table length {len(labels)} is not a power of two")
        size = 1 << check_n_bits(n_bits)
        if len(labels) != size:
            raise DomainError(f"map table must have length 2**{n_bits} = {size}, got {len(labels)}")
        for g, value in enumerate(labels, start=1):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise DomainError(f"phi({g}) = {value!r} is not an integer")
            if not 1 <= value <= size:
                raise DomainError(f"phi({g}) = {value} is outside [1, {size}]")
        return cls(n_bits, np.asarray(labels, dtype=np.int64) - 1)

    @classmethod
    def identity(cls, n_bits: int) -> "ShufflingMap":
        return cls(n_bits, np.arange(1 << n_bits))

    @classmethod
    def constant(cls, n_bits: int, value: int = 1) -> "ShufflingMap":
        value = check_element(value, n_bits, "value")
        return cls(n_bits, np.full(1 << n_bits, value - 1))

    @classmethod
    def from_matrix(cls, matrix) -> "ShufflingMap":
        """The linear map ``mask -> matrix @ mask`` over the two-element field.

        Column ``j`` of the N x N 0/1 ``matrix`` is the image of the mask with
        only bit ``j`` set.
        """
        mat = np.asarray(matrix, dtype=np.int64) & 1
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError(f"matrix must be square, got shape {mat.shape}")
        n_bits = check_n_bits(mat.shape[0])
        weights = 1 << np.arange(n_bits, dtype=np.int64)
        columns = mat.T @ weights  # image mask of each basis vector
        masks = np.zeros(1 << n_bits, dtype=np.int64)
        for j in range(n_bits):
            lo = 1 << j
            masks[lo : 2 * lo] = masks[:lo] ^ columns[j]
        return cls(n_bits, masks)

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    @property
    def table(self) -> list[int]:
        """The 1-based table ``[phi(1), ..., phi(M)]``."""
        return (self.masks.astype(np.int64) + 1).tolist()

    def __call__(self, g: int) -> int:
        g = check_element(g, self.n_bits)
        return int(self.masks[g - 1]) + 1

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShufflingMap):
            return NotImplemented
        return self.n_bits == other.n_bits and np.array_equal(self.masks, other.masks)

    def __hash__(self) -> int:
        return hash((self.n_bits, self.masks.tobytes()))

    def __repr__(self) -> str:
        if self.size <= 16:
            return f"ShufflingMap(n_bits={self.n_bits}, phi={self.table})"
        return f"ShufflingMap(n_bits={self.n_bits}, M={self.size})"

    def step_masks(self) -> np.ndarray:
        """Mask table of ``T``: ``T[b] = b ^ phi[b]``."""
        return np.arange(self.size, dtype=self.masks.dtype) ^ self.masks

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "phi": self.table}

    @classmethod
    def from_dict(cls, data: dict) -> "ShufflingMap":
        if not isinstance(data, dict) or "n_bits" not in data or "phi" not in data:
            raise DomainError('map JSON must be an object with keys "n_bits" and "phi"')
        n_bits = check_int(data["n_bits"], "n_bits", minimum=0)
        if not isinstance(data["phi"], list):
            raise DomainError('"phi" must be a list of 1-based labels')
        return cls.from_labels(data["phi"], n_bits=n_bits)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ShufflingMap":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"map file is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def _same_group(phi: ShufflingMap, *elements: int) -> list[int]:
    return [check_element(g, phi.n_bits) for g in elements]


def circ(a: int, b: int, n_bits: int | None = None) -> int:
    """Group operation: ``((a - 1) XOR (b - 1)) + 1``.

    Plain labels carry no dimension, so pass ``n_bits`` to have both operands
    checked against ``G`` of that size.
    """
    a = check_element(a, n_bits, "a")
    b = check_element(b, n_bits, "b")
    return ((a - 1) ^ (b - 1)) + 1


def quadrant_encode(signs: Iterable[int]) -> int:
    """Label of the quadrant with coordinate signs ``signs[0], ..., signs[N-1]``.

    ``signs[i-1]`` is the sign of coordinate ``i``; the label is
    ``1 + sum(2**(i-1) for negative coordinates i)``.
    """
    mask = 0
    for i, s in enumerate(signs):
        if isinstance(s, bool) or s not in (1, -1):
            raise DomainError(f"sign at coordinate {i + 1} must be +1 or -1, got {s!r}")
        if s == -1:
            mask |= 1 << i
    return mask + 1


def quadrant_decode(g: int, n_bits: int) -> tuple[int, ...]:
    """Inverse of :func:`quadrant_encode` for ``G`` with ``N = n_bits``."""
    mask = check_element(g, n_bits) - 1
    return tuple(-1 if (mask >> i) & 1 else 1 for i in range(n_bits))


def star(a: int, b: int, phi: ShufflingMap) -> int:
    a, b = _same_group(phi, a, b)
    return ((a - 1) ^ int(phi.masks[b - 1])) + 1


def truncator_step(g: int, phi: ShufflingMap) -> int:
    """One step of the dynamics, ``T(g) = g * g``."""
    (g,) = _same_group(phi, g)
    m = g - 1
    return (m ^ int(phi.masks[m])) + 1


def star_power(g: int, p: int, phi: ShufflingMap) -> int:
    """``g^{*p}``, i.e. ``T`` applied ``p - 1`` times to ``g``."""
    (g,) = _same_group(phi, g)
    p = check_int(p, "p", minimum=1)
    table = phi.masks
    m = g - 1
    for _ in range(p - 1):
        m ^= int(table[m])
    return m + 1


def phi_iterate(g: int, k: int, phi: ShufflingMap) -> int:
    """``phi`` applied ``k`` times; also the diagonal power ``g^{(x) 2**k}``."""
    (g,) = _same_group(phi, g)
    k = check_int(k, "k", minimum=0)
    table = phi.masks
    m = g - 1
    for _ in range(k):
        m = int(table[m])
    return m + 1


def commutator(a: int, b: int, phi: ShufflingMap) -> int:
    """``[a, b] = phi(a circ b) circ phi(a) circ phi(b)``.

    Equals 1 for all pairs exactly when ``phi`` is additive.
    """
    a, b = _same_group(phi, a, b)
    t = phi.masks
    return (int(t[(a - 1) ^ (b - 1)]) ^ int(t[a - 1]) ^ int(t[b - 1])) + 1


def _masks_commutator(t: np.ndarray, a, b):
    return t[a ^ b] ^ t[a] ^ t[b]


@lru_cache(maxsize=None)
def _pascal_rows(p_max: int) -> tuple[tuple[int, ...], ...]:
    # rows[p] = (gamma_{0,p}, ..., gamma_{p-1,p}) via the mod-2 recurrence
    rows: list[tuple[int, ...]] = [(), (1,)]
    for p in range(2, p_max + 1):
        prev = rows[-1]
        row = [1]
        for k in range(1, p - 1):
            row.append((prev[k] + prev[k - 1]) % 2)
        row.append(1)
        rows.append(tuple(row))
    return tuple(rows)


def gamma(k: int, p: int) -> int:
    """Mod-2 Pascal coefficient selecting ``phi^(k)(g)`` in ``g^{*p}``."""
    p = check_int(p, "p", minimum=1)
    k = check_int(k, "k")
    if not 0 <= k <= p - 1:
        raise DomainError(f"k must lie in [0, {p - 1}], got {k}")
    return _pascal_rows(max(p, 64))[p][k]


def gamma_row(p: int) -> tuple[int, ...]:
    p = check_int(p, "p", minimum=1)
    return _pascal_rows(max(p, 64))[p]


def poly_eval(g: int, p: int, phi: ShufflingMap) -> int:
    """Polynomial form of ``g^{*p}``: XOR of ``phi^(k)(g)`` over ``k`` with ``gamma(k, p) = 1``.

    Agrees with :func:`star_power` whenever ``phi`` is a group homomorphism.
    """
    (g,) = _same_group(phi, g)
    table = phi.masks
    acc = 0
    m = g - 1
    for coeff in gamma_row(p):
        if coeff:
            acc ^= m
        m = int(table[m])
    return acc + 1


def gast4_rhs(g: int, phi: ShufflingMap) -> int:
    """Expanded form of ``g^{*4}`` built from iterates and commutators.

    ``g circ phi(g) circ phi^2(g) circ phi^3(g) circ C circ phi(C)
    circ [g, phi^2(g)] circ [g circ phi^2(g), C]`` with ``C = [g, phi(g)]``.
    """
    (g,) = _same_group(phi, g)
    t = phi.masks.astype(np.int64)
    a = g - 1
    b = int(t[a])
    c = int(t[b])
    d = int(t[c])
    comm = _masks_commutator(t, a, b)
    out = a ^ b ^ c ^ d ^ comm ^ t[comm] ^ _masks_commutator(t, a, c) ^ _masks_commutator(t, a ^ c, comm)
    return int(out) + 1
