"""Exact decomposition of the functional graph of ``T(g) = g circ phi(g)``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .algebra import ShufflingMap
from .validation import check_element

__all__ = ["Attractor", "OrbitReport", "analyze", "p_star", "TRANSIENT"]

#: Period of a state that never returns to itself.
TRANSIENT = math.inf


@dataclass(frozen=True)
class Attractor:
    cycle: tuple[int, ...]  # orbit order, starting at the smallest label
    basin: int

    @property
    def length(self) -> int:
        return len(self.cycle)


@dataclass(frozen=True, eq=False)
class OrbitReport:
    """Per-state periods, attractor ids and transient depths of a map.

    Array fields are indexed by mask ``g - 1``.  ``period`` holds 0 for
    transient states; use :meth:`period_of` for the ``inf`` convention.
    ``attractor_id`` indexes :attr:`attractors`, which are sorted by the
    smallest label on each cycle.
    """

    n_bits: int
    period: np.ndarray
    attractor_id: np.ndarray
    transient_depth: np.ndarray
    attractors: tuple[Attractor, ...]

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    def period_of(self, g: int) -> float | int:
        g = check_element(g, self.n_bits)
        value = int(self.period[g - 1])
        return value if value else TRANSIENT

    def attractor_of(self, g: int) -> Attractor:
        g = check_element(g, self.n_bits)
        return self.attractors[int(self.attractor_id[g - 1])]

    def depth_of(self, g: int) -> int:
        g = check_element(g, self.n_bits)
        return int(self.transient_depth[g - 1])

    @property
    def spectrum(self) -> dict[int, int]:
        """Number of attractors of each cycle length."""
        counts: dict[int, int] = {}
        for att in self.attractors:
            counts[att.length] = counts.get(att.length, 0) + 1
        return dict(sorted(counts.items()))

    def fixed_points(self) -> frozenset[int]:
        return frozenset((np.flatnonzero(self.period == 1) + 1).tolist())

    def to_dict(self) -> dict:
        transient = np.flatnonzero(self.transient_depth > 0)
        return {
            "n_bits": self.n_bits,
            "attractors": [
                {"cycle": list(a.cycle), "length": a.length, "basin": a.basin} for a in self.attractors
            ],
            "transients": {str(int(g) + 1): int(self.transient_depth[g]) for g in transient},
            "spectrum": {str(k): v for k, v in self.spectrum.items()},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def analyze(phi: ShufflingMap) -> OrbitReport:
    """Decompose the dynamics of ``phi`` into cycles, basins and transients.

    Uses pointer doubling: after ``N`` squarings the jump table is
    ``T**M``, whose image is exactly the set of cyclic states.  A second
    doubling pass accumulates, along windows of length ``2**k``, the number
    of non-cyclic states (the transient depth) and the smallest cyclic label
    (the cycle identity).  Everything is vectorized and iterative.
    """
    n_bits = phi.n_bits
    size = phi.size
    step = phi.step_masks().astype(np.int64 if n_bits > 31 else np.int32)

    jump = step
    for _ in range(n_bits):
        jump = jump[jump]
    on_cycle = np.zeros(size, dtype=bool)
    on_cycle[jump] = True

    sentinel = size
    depth = (~on_cycle).astype(np.int32)
    cycle_min = np.where(on_cycle, np.arange(size, dtype=step.dtype), sentinel).astype(step.dtype)
    jump = step
    for _ in range(n_bits):
        depth = depth + depth[jump]
        np.minimum(cycle_min, cycle_min[jump], out=cycle_min)
        jump = jump[jump]
    landing = jump  # T**M, always on a cycle
    root = cycle_min[landing]

    cycle_roots = np.flatnonzero(on_cycle & (cycle_min == np.arange(size)))
    attractor_index = np.full(size + 1, -1, dtype=np.int64)
    attractor_index[cycle_roots] = np.arange(cycle_roots.size)
    attractor_id = attractor_index[root]
    basins = np.bincount(attractor_id, minlength=cycle_roots.size)
    lengths = np.bincount(attractor_id[on_cycle], minlength=cycle_roots.size)

    attractors = []
    for k, r in enumerate(cycle_roots.tolist()):
        cycle = [r + 1]
        x = int(step[r])
        while x != r:
            cycle.append(x + 1)
            x = int(step[x])
        assert len(cycle) == lengths[k]
        attractors.append(Attractor(tuple(cycle), int(basins[k])))

    period = np.where(on_cycle, lengths[attractor_id], 0)
    for arr in (period, attractor_id, depth):
        arr.setflags(write=False)
    return OrbitReport(
        n_bits=n_bits,
        period=period,
        attractor_id=attractor_id,
        transient_depth=depth,
        attractors=tuple(attractors),
    )


def p_star(g: int, phi: ShufflingMap, report: OrbitReport | None = None) -> float | int:
    """Period ``min{j >= 1 : T**j(g) = g}``, or ``inf`` for a transient state.

    Pass a precomputed ``report`` to avoid re-analyzing ``phi``.
    """
    g = check_element(g, phi.n_bits)
    if report is None:
        report = analyze(phi)
    return report.period_of(g)
