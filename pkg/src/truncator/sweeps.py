"""Vectorized theorem sweeps over exhaustive or sampled families of maps.

Each sweep walks map tables in batches of shape ``(B, M)`` and returns a
:class:`SweepResult`.  ``failures`` are violations of asserted statements
and make the sweep fail; ``logged`` records are informational (the converse
directions of the period classification).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .algebra import gamma_row
from .exceptions import CapacityError, DomainError
from .map_space import (
    EXPENSIVE_ENUMERATION_SIZE,
    FREE_ENUMERATION_SIZE,
    map_batches,
    period_clauses,
)
from .parallel import block_rng, blocks, run_map
from .validation import check_int, check_seed, check_size_power_of_two

__all__ = ["SweepResult", "THEOREMS", "run_sweep", "gamma_lucas_check"]

THEOREMS = ("1", "2", "3", "period", "gast4")

#: Stored records per kind; the counts always cover everything.
RECORD_LIMIT = 1000
_STREAM_MAPS = 11
_STREAM_HOMS = 12


@dataclass
class SweepResult:
    theorem: str
    size: int
    family: str
    maps_checked: int = 0
    failure_count: int = 0
    logged_count: int = 0
    failures: list[dict] = field(default_factory=list)
    logged: list[dict] = field(default_factory=list)
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def merge(self, other: "SweepResult") -> None:
        self.maps_checked += other.maps_checked
        self.failure_count += other.failure_count
        self.logged_count += other.logged_count
        self.failures.extend(other.failures[: max(0, RECORD_LIMIT - len(self.failures))])
        self.logged.extend(other.logged[: max(0, RECORD_LIMIT - len(self.logged))])
        for key, value in other.stats.items():
            self.stats[key] = self.stats.get(key, 0) + value

    def summary(self) -> dict:
        return {
            "theorem": self.theorem,
            "M": self.size,
            "family": self.family,
            "maps_checked": self.maps_checked,
            "passed": self.passed,
            "failures": self.failure_count,
            "logged": self.logged_count,
            "stats": dict(sorted(self.stats.items())),
        }

    def counterexample_lines(self) -> Iterator[str]:
        for rec in self.failures + self.logged:
            yield json.dumps(rec)


def _record(theorem: str, table: np.ndarray, g, expected, observed) -> dict:
    return {
        "theorem": theorem,
        "M": int(table.shape[-1]),
        "phi": (table.astype(np.int64) + 1).tolist(),
        "g": None if g is None else int(g) + 1,
        "expected": expected,
        "observed": observed,
    }


def _add(result: SweepResult, kind: str, tables: np.ndarray, rows: np.ndarray, make) -> None:
    """Count ``rows`` (map indices into ``tables``) and keep the first few records."""
    rows = np.asarray(rows)
    if kind == "failure":
        result.failure_count += rows.size
        store = result.failures
    else:
        result.logged_count += rows.size
        store = result.logged
    for r in rows[: max(0, RECORD_LIMIT - len(store))]:
        store.append(make(tables[r], r))


def _stat(result: SweepResult, key: str, value: int) -> None:
    result.stats[key] = result.stats.get(key, 0) + value


def _pairs(size: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    return a.ravel(), b.ravel()


def _gather(t: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.take_along_axis(t, np.broadcast_to(idx, (t.shape[0],) + idx.shape[1:]), axis=1)


def _check_theorem1(tables: np.ndarray, result: SweepResult) -> None:
    t = tables.astype(np.intp)
    size = t.shape[1]
    a, b = _pairs(size)
    ta, tb = t[:, a], t[:, b]
    circ_hom = np.all(t[:, a ^ b] == (ta ^ tb), axis=1)
    star_hom = np.all(_gather(t, a[None, :] ^ tb) == (ta ^ _gather(t, tb)), axis=1)
    surjective = np.all(np.sort(t, axis=1) == np.arange(size), axis=1)
    _stat(result, "circ_homomorphisms", int(circ_hom.sum()))
    _stat(result, "star_homomorphisms", int(star_hom.sum()))
    _stat(result, "surjective_star_homomorphisms", int((star_hom & surjective).sum()))
    _add(
        result, "failure", tables, np.flatnonzero(circ_hom & ~star_hom),
        lambda row, _: _record("1", row, None, "star-homomorphism", "not a star-homomorphism"),
    )
    _add(
        result, "failure", tables, np.flatnonzero(star_hom & surjective & ~circ_hom),
        lambda row, _: _record("1", row, None, "circ-homomorphism", "not a circ-homomorphism"),
    )


def _check_theorem2(tables: np.ndarray, result: SweepResult) -> None:
    t = tables.astype(np.intp)
    size = t.shape[1]
    a, b = _pairs(size)
    step = np.arange(size) ^ t
    commutative = np.all((a ^ t[:, b]) == (b ^ t[:, a]), axis=1)
    constant_step = np.all(step == step[:, :1], axis=1)
    _stat(result, "star_commutative", int(commutative.sum()))
    _add(
        result, "failure", tables, np.flatnonzero(commutative != constant_step),
        lambda row, _: _record("2", row, None, "commutative iff T constant", "characterizations disagree"),
    )
    in_kernel = t == 0
    singleton = in_kernel.sum(axis=1) == 1
    hat = np.argmax(in_kernel, axis=1)
    # T constant equal to the kernel element: one-step absorption and uniqueness of the attractor
    absorbed = np.all(step == hat[:, None], axis=1)
    bad = commutative & ~(singleton & absorbed)
    _add(
        result, "failure", tables, np.flatnonzero(bad),
        lambda row, _: _record(
            "2", row, None, "singleton kernel {g} with T == g",
            {"kernel": (np.flatnonzero(row == 0) + 1).tolist(), "T": ((np.arange(size) ^ row) + 1).tolist()},
        ),
    )


def _periods(t: np.ndarray) -> np.ndarray:
    """``p*`` of every element by direct iteration, 0 for transient elements."""
    size = t.shape[1]
    step = np.arange(size) ^ t
    g = np.broadcast_to(np.arange(size), t.shape)
    cur = g.copy()
    period = np.zeros(t.shape, dtype=np.int64)
    for j in range(1, size + 1):
        cur = np.take_along_axis(step, cur, axis=1)
        hit = (cur == g) & (period == 0)
        period[hit] = j
    return period


def _check_period(tables: np.ndarray, result: SweepResult) -> None:
    t = tables.astype(np.intp)
    period = _periods(t)
    clauses = period_clauses(t)
    pred = clauses["predicted"]

    def per_element(theorem, expected_of, observed_of):
        def make(row, r):
            g = int(np.flatnonzero(mask[r])[0])
            return _record(theorem, row, g, expected_of(r, g), observed_of(r, g))

        return make

    def observed(r, g):
        return int(period[r, g]) if period[r, g] else "transient"

    mask = (pred > 0) & (pred != period)
    _stat(result, "predictions", int((pred > 0).sum()))
    for k in (1, 2, 3):
        _stat(result, f"predicted_{k}", int((pred == k).sum()))
    _add(
        result, "failure", tables, np.flatnonzero(mask.any(axis=1)),
        per_element("period", lambda r, g: int(pred[r, g]), observed),
    )
    mask = clauses["in_kernel"] != (period == 1)
    _add(
        result, "failure", tables, np.flatnonzero(mask.any(axis=1)),
        per_element("period-1-iff", lambda r, g: "p*=1 iff g in ker phi", observed),
    )
    for k, hyp in ((2, clauses["hypotheses_2"]), (3, clauses["hypotheses_3"])):
        mask = hyp & (period == k) & (pred != k)
        _stat(result, f"converse_{k}_misses", int(mask.sum()))
        _add(
            result, "logged", tables, np.flatnonzero(mask.any(axis=1)),
            per_element(f"period-{k}-converse", lambda r, g, k=k: f"clause {k} membership", observed),
        )


def _check_gast4(tables: np.ndarray, result: SweepResult) -> None:
    t = tables.astype(np.intp)
    size = t.shape[1]
    g = np.broadcast_to(np.arange(size), t.shape)

    def at(x):
        return np.take_along_axis(t, x, axis=1)

    def comm(x, y):
        return at(x ^ y) ^ at(x) ^ at(y)

    step = np.arange(size) ^ t
    lhs = g
    for _ in range(3):
        lhs = np.take_along_axis(step, lhs, axis=1)
    f1 = t
    f2 = at(f1)
    f3 = at(f2)
    c = comm(g, f1)
    rhs = g ^ f1 ^ f2 ^ f3 ^ c ^ at(c) ^ comm(g, f2) ^ comm(g ^ f2, c)
    bad = lhs != rhs

    def make(row, r):
        e = int(np.flatnonzero(bad[r])[0])
        return _record("gast4", row, e, int(lhs[r, e]) + 1, int(rhs[r, e]) + 1)

    _add(result, "failure", tables, np.flatnonzero(bad.any(axis=1)), make)


def _hom_tables(n_bits: int, columns: np.ndarray) -> np.ndarray:
    """Tables of the linear maps whose basis images are the rows of ``columns``."""
    tables = np.zeros((columns.shape[0], 1 << n_bits), dtype=np.int64)
    for j in range(n_bits):
        lo = 1 << j
        tables[:, lo : 2 * lo] = tables[:, :lo] ^ columns[:, j : j + 1]
    return tables


def _check_theorem3(tables: np.ndarray, result: SweepResult, p_max: int = 16) -> None:
    t = tables.astype(np.intp)
    size = t.shape[1]
    step = np.arange(size) ^ t
    iterates = [np.broadcast_to(np.arange(size), t.shape)]
    for _ in range(p_max - 1):
        iterates.append(np.take_along_axis(t, iterates[-1], axis=1))
    star = iterates[0]
    bad = np.zeros(t.shape, dtype=bool)
    first_p = np.zeros(t.shape, dtype=np.int64)
    for p in range(1, p_max + 1):
        if p > 1:
            star = np.take_along_axis(step, star, axis=1)
        poly = np.zeros(t.shape, dtype=np.intp)
        for k, coeff in enumerate(gamma_row(p)):
            if coeff:
                poly = poly ^ iterates[k]
        wrong = (poly != star) & ~bad
        first_p[wrong] = p
        bad |= wrong

    def make(row, r):
        e = int(np.flatnonzero(bad[r])[0])
        return _record("3", row, e, "poly_eval == star_power", {"p": int(first_p[r, e])})

    _add(result, "failure", tables, np.flatnonzero(bad.any(axis=1)), make)


_CHECKS: dict[str, Callable[[np.ndarray, SweepResult], None]] = {
    "1": _check_theorem1,
    "2": _check_theorem2,
    "period": _check_period,
    "gast4": _check_gast4,
    "3": _check_theorem3,
}


def _batch_size(size: int) -> int:
    return max(1, (1 << 21) // (size * size))


def _exhaustive_chunk(theorem: str, size: int, start: int, stop: int) -> SweepResult:
    result = SweepResult(theorem, size, "exhaustive")
    for tables in map_batches(size, _batch_size(size), start, stop, expensive=True):
        result.maps_checked += tables.shape[0]
        _CHECKS[theorem](tables, result)
    return result


def _sampled_chunk(theorem: str, size: int, seed: int, block: int, count: int) -> SweepResult:
    result = SweepResult(theorem, size, "sampled")
    rng = block_rng(seed, _STREAM_MAPS, block)
    tables = rng.integers(0, size, size=(count, size), dtype=np.int64)
    result.maps_checked += count
    _CHECKS[theorem](tables, result)
    return result


def _hom_exhaustive_chunk(n_bits: int, start: int, stop: int) -> SweepResult:
    result = SweepResult("3", 1 << n_bits, "all homomorphisms")
    idx = np.arange(start, stop, dtype=np.int64)
    # matrix entry (i, j) is bit i*N + j of the index; column j is the image of basis vector j
    bits = (idx[:, None] >> np.arange(n_bits * n_bits)) & 1
    mats = bits.reshape(-1, n_bits, n_bits)
    columns = (mats * (1 << np.arange(n_bits))[None, :, None]).sum(axis=1)
    result.maps_checked += idx.size
    _check_theorem3(_hom_tables(n_bits, columns), result)
    return result


def _hom_sampled_chunk(n_bits: int, seed: int, block: int, count: int) -> SweepResult:
    result = SweepResult("3", 1 << n_bits, "sampled homomorphisms")
    rng = block_rng(seed, _STREAM_HOMS, block)
    columns = rng.integers(0, 1 << n_bits, size=(count, n_bits), dtype=np.int64)
    result.maps_checked += count
    _check_theorem3(_hom_tables(n_bits, columns), result)
    return result


def gamma_lucas_check(p_max: int = 64) -> list[tuple[int, int]]:
    """``(k, p)`` pairs where the recurrence disagrees with ``C(p-1, k) mod 2``."""
    return [
        (k, p)
        for p in range(1, p_max + 1)
        for k, value in enumerate(gamma_row(p))
        if value != int((k & (p - 1)) == k)
    ]


def run_sweep(
    theorem: str,
    size: int,
    expensive: bool = False,
    samples: int | None = None,
    seed: int = 0,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> SweepResult:
    """Verify one statement over every map on ``G`` of order ``size`` or over samples.

    With ``samples`` set, ``samples`` maps are drawn uniformly (for theorem
    ``"3"``: uniformly random homomorphisms) from the stream of ``seed``.
    Without it the family is exhaustive: all maps for ``M <= 4`` and, with
    ``expensive=True``, ``M = 8``; for theorem ``"3"`` all ``2**(N*N)``
    homomorphisms.
    """
    theorem = str(theorem)
    if theorem not in THEOREMS:
        raise DomainError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")
    n_bits = check_size_power_of_two(size)
    seed = check_seed(seed)

    if theorem == "3":
        if samples is not None:
            samples = check_int(samples, "samples", minimum=1)
            if n_bits > 12:
                raise CapacityError("homomorphism sampling supports N <= 12")
            args = [(n_bits, seed, b, count) for b, _, count in blocks(samples, 1 << 10)]
            parts = run_map(_hom_sampled_chunk, args, jobs, progress)
            family = "sampled homomorphisms"
        else:
            if n_bits > 4:
                raise CapacityError("exhaustive homomorphism sweep supports N <= 4")
            total = 1 << (n_bits * n_bits)
            args = [(n_bits, lo, min(lo + 4096, total)) for lo in range(0, total, 4096)]
            parts = run_map(_hom_exhaustive_chunk, args, jobs, progress)
            family = "all homomorphisms"
        gamma_bad = gamma_lucas_check(64)
    else:
        gamma_bad = []
        if samples is not None:
            samples = check_int(samples, "samples", minimum=1)
            if size > 1 << 8:
                raise CapacityError("sampled sweeps support M <= 256")
            args = [(theorem, size, seed, b, count) for b, _, count in blocks(samples, _batch_size(size))]
            parts = run_map(_sampled_chunk, args, jobs, progress)
            family = "sampled"
        else:
            if size > EXPENSIVE_ENUMERATION_SIZE:
                raise CapacityError(f"exhaustive sweep over {size}**{size} maps is not supported")
            if size > FREE_ENUMERATION_SIZE and not expensive:
                raise CapacityError(f"exhaustive sweep at M={size} requires the expensive flag")
            total = size**size
            chunk = max(_batch_size(size), total // 64 or 1)
            args = [(theorem, size, lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
            parts = run_map(_exhaustive_chunk, args, jobs, progress)
            family = "exhaustive"

    result = SweepResult(theorem, size, family)
    for part in parts:
        result.merge(part)
    for k, p in gamma_bad:
        result.failure_count += 1
        if len(result.failures) < RECORD_LIMIT:
            result.failures.append(
                {"theorem": "3-gamma", "M": size, "phi": None, "g": None, "expected": [k, p], "observed": "mismatch"}
            )
    return result
