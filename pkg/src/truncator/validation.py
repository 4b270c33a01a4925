"""Input validation helpers shared by every module."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import CapacityError, DimensionError, DomainError

#: Largest N for which a full map table (2**N entries) is built.
MAX_TABLE_BITS = 24
#: Largest N for which dense M x M matrices are built.
MAX_DENSE_BITS = 12


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_n_bits(n_bits, cap: int = MAX_TABLE_BITS) -> int:
    n_bits = check_int(n_bits, "n_bits", minimum=0)
    if n_bits > cap:
        raise CapacityError(f"n_bits={n_bits} exceeds the cap of {cap}")
    return n_bits


def check_element(g, n_bits: int | None = None, name: str = "element") -> int:
    """Validate a 1-based element label; returns it as ``int``.

    With ``n_bits`` given, the label must lie in ``[1, 2**n_bits]``; a label
    beyond that range belongs to a larger group and raises
    :class:`DimensionError`.
    """
    g = check_int(g, name)
    if g < 1:
        raise DomainError(f"{name} must be >= 1, got {g}")
    if n_bits is not None and g > (1 << n_bits):
        raise DimensionError(f"{name}={g} is not in G with N={n_bits} (M={1 << n_bits})")
    return g


def check_size_power_of_two(size: int, name: str = "M") -> int:
    size = check_int(size, name, minimum=1)
    if size & (size - 1):
        raise DomainError(f"{name} must be a power of two, got {size}")
    return size.bit_length() - 1


def check_seed(seed) -> int:
    seed = check_int(seed, "seed", minimum=0)
    if seed >= 1 << 64:
        raise DomainError("seed must fit in 64 bits")
    return seed


def check_stochastic(matrix, name: str = "matrix", atol: float = 1e-12) -> np.ndarray:
    """Return ``matrix`` as a float64 array after checking it is row-stochastic."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} entries must be finite and non-negative")
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
    if bad.size:
        raise DomainError(f"{name} row {int(bad[0]) + 1} sums to {sums[bad[0]]!r}, not 1")
    return arr
