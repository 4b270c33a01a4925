"""Synchronous spin market model on a periodic lattice.

Site ``i`` (row-major over the torus, 0-based) is bit ``i`` of a
configuration mask, set when the spin is ``-1``.  The local field at site
``x`` is ``h = sum_{y in N(x)} eta_y - alpha * eta_x * |sum_y eta_y| / N``.
In the frozen phase each spin becomes ``eta_x * sgn(eta_x * h_x)`` with
``sgn(0) = +1``; at finite ``beta`` every spin is ``+1`` with probability
``1 / (1 + exp(-2 beta h_x))``, independently across sites.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .algebra import ShufflingMap
from .exceptions import CapacityError, DomainError, TieError, TieWarning
from .orbits import analyze
from .random_maps import TransitionMatrix
from .validation import MAX_DENSE_BITS, MAX_TABLE_BITS, check_element, check_int

__all__ = [
    "SpinModelParams",
    "neighbor_table",
    "configurations",
    "local_field",
    "local_fields",
    "flip_probability",
    "frozen_successors",
    "frozen_phi",
    "finite_beta_matrix",
    "regime_report",
    "spin_config",
    "complement",
    "rotate_ring",
]


@dataclass(frozen=True)
class SpinModelParams:
    """Lattice ``(Z / L)**d`` with ``N = L**d`` sites.

    ``radius`` is the l1 radius of the neighborhood.  Offsets are enumerated
    as vectors, so when the torus is small enough for two offsets to reach
    the same site (``L = 2``) that site is counted once per offset; offsets
    that wrap onto the site itself are dropped.
    """

    L: int
    d: int = 1
    alpha: float = 0.0
    beta: float = math.inf
    radius: int = 1
    n_sites: int = field(init=False, repr=False)

    def __post_init__(self):
        check_int(self.L, "L", minimum=2)
        check_int(self.d, "d", minimum=1)
        check_int(self.radius, "radius", minimum=1)
        alpha = float(self.alpha)
        beta = float(self.beta)
        if not math.isfinite(alpha) or alpha < 0:
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha!r}")
        if math.isnan(beta) or beta <= 0:
            raise DomainError(f"beta must be > 0 or inf, got {self.beta!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "n_sites", int(self.L) ** int(self.d))

    @property
    def N(self) -> int:
        return self.n_sites

    @property
    def frozen(self) -> bool:
        return math.isinf(self.beta)

    def with_alpha(self, alpha: float) -> "SpinModelParams":
        return SpinModelParams(self.L, self.d, alpha, self.beta, self.radius)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "d": self.d,
            "alpha": self.alpha,
            "beta": "inf" if self.frozen else self.beta,
            "radius": self.radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpinModelParams":
        try:
            beta = data.get("beta", "inf")
            beta = math.inf if beta in ("inf", None) else float(beta)
            return cls(data["L"], data.get("d", 1), float(data.get("alpha", 0.0)), beta, data.get("radius", 1))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"invalid model spec: {exc}") from None


def _offsets(d: int, radius: int) -> list[tuple[int, ...]]:
    rng = range(-radius, radius + 1)
    return [v for v in itertools.product(rng, repeat=d) if 0 < sum(map(abs, v)) <= radius]


def neighbor_table(params: SpinModelParams) -> np.ndarray:
    """``(N, K)`` array: column ``k`` is the site reached by offset ``k``."""
    L, d = params.L, params.d
    coords = np.array(list(itertools.product(range(L), repeat=d)))  # row-major order
    weights = L ** np.arange(d - 1, -1, -1)
    columns = []
    for off in _offsets(d, params.radius):
        target = ((coords + np.array(off)) % L) @ weights
        columns.append(target)
    table = np.stack(columns, axis=1)
    # an offset is a translation, so it wraps onto self for every site or none
    table = table[:, table[0] != 0]
    if table.shape[1] == 0:
        raise DomainError("empty neighborhood")
    return table


def configurations(n_sites: int) -> np.ndarray:
    """All ``2**n_sites`` spin configurations as a ``(M, N)`` array of +-1, row = mask."""
    masks = np.arange(1 << n_sites, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n_sites)) & 1
    return (1 - 2 * bits).astype(np.int8)


def spin_config(g: int, n_sites: int) -> np.ndarray:
    mask = check_element(g, n_sites) - 1
    return (1 - 2 * ((mask >> np.arange(n_sites)) & 1)).astype(np.int8)


def _as_eta(eta, params: SpinModelParams) -> np.ndarray:
    eta = np.asarray(eta)
    if eta.shape[-1] != params.N:
        raise DomainError(f"configuration must have {params.N} sites, got {eta.shape[-1]}")
    if not np.all(np.abs(eta) == 1):
        raise DomainError("spins must be +1 or -1")
    return eta.astype(np.int64)


def _field_parts(eta: np.ndarray, params: SpinModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor sums and ``|sum eta|`` for configurations ``eta`` of shape ``(..., N)``."""
    nbrs = neighbor_table(params)
    local = eta[..., nbrs].sum(axis=-1)
    magnet = np.abs(eta.sum(axis=-1, keepdims=True))
    return local, magnet


def local_fields(eta, params: SpinModelParams) -> np.ndarray:
    eta = _as_eta(eta, params)
    local, magnet = _field_parts(eta, params)
    return local - params.alpha * eta * magnet / params.N


def local_field(x: int, eta, params: SpinModelParams) -> float:
    """``h(x) = sum of neighbor spins - alpha * eta_x * |magnetization| / N``."""
    x = check_int(x, "x", minimum=0)
    if x >= params.N:
        raise DomainError(f"site {x} is outside [0, {params.N - 1}]")
    return float(local_fields(eta, params)[x])


def flip_probability(x: int, eta, params: SpinModelParams) -> float:
    """Probability ``p+`` that site ``x`` is ``+1`` after the update."""
    if params.frozen:
        raise DomainError("beta is infinite; use frozen_phi for the deterministic map")
    return float(expit(2.0 * params.beta * local_field(x, eta, params)))


def _check_compilable(params: SpinModelParams, cap: int) -> None:
    if params.N > cap:
        raise CapacityError(f"N={params.N} sites exceeds the cap of {cap}")


def frozen_successors(params: SpinModelParams, strict: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic successor mask of every configuration, plus tied masks.

    The truncation sign is that of ``N * eta_x * h_x``, which equals
    ``N * eta_x * neighbor_sum - alpha * |magnetization|`` and is evaluated
    in that form so integer-valued thresholds tie exactly.
    """
    _check_compilable(params, MAX_TABLE_BITS)
    n = params.N
    masks = np.arange(1 << n, dtype=np.int64)
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    succ = np.empty(1 << n, dtype=np.int64)
    tied = []
    chunk = max(1, (1 << 20) // n)
    for lo in range(0, 1 << n, chunk):
        part = masks[lo : lo + chunk]
        eta = (1 - 2 * ((part[:, None] >> np.arange(n)) & 1)).astype(np.int64)
        local, magnet = _field_parts(eta, params)
        scaled = n * eta * local - params.alpha * magnet
        flip = scaled < 0
        tie = scaled == 0
        if tie.any():
            tied.append(part[tie.any(axis=1)])
        succ[lo : lo + chunk] = part ^ (flip.astype(np.int64) @ weights)
    tied_masks = np.concatenate(tied) if tied else np.empty(0, dtype=np.int64)
    if tied_masks.size:
        labels = (tied_masks[:8] + 1).tolist()
        msg = (
            f"{tied_masks.size} configuration(s) have a zero truncation sign at alpha={params.alpha}"
            f" (first labels: {labels})"
        )
        if strict:
            raise TieError(msg)
        warnings.warn(msg + "; applied sgn(0)=+1", TieWarning, stacklevel=2)
    return succ, tied_masks


def frozen_phi(params: SpinModelParams, strict: bool = False) -> ShufflingMap:
    """Shuffling map of the zero-temperature dynamics: ``phi(g) = g circ successor(g)``."""
    succ, _ = frozen_successors(params, strict=strict)
    return ShufflingMap(params.N, np.arange(succ.size) ^ succ)


def finite_beta_matrix(params: SpinModelParams) -> TransitionMatrix:
    """Synchronous-update transition matrix at finite ``beta``."""
    if params.frozen:
        raise DomainError("finite_beta_matrix needs finite beta")
    _check_compilable(params, MAX_DENSE_BITS)
    n = params.N
    eta = configurations(n).astype(np.int64)
    local, magnet = _field_parts(eta, params)
    h = local - params.alpha * eta * magnet / n
    p_plus = expit(2.0 * params.beta * h)
    p_minus = expit(-2.0 * params.beta * h)
    rows = np.ones((1 << n, 1))
    for x in range(n):
        # site x becomes the most significant bit built so far
        rows = np.concatenate([rows * p_plus[:, x : x + 1], rows * p_minus[:, x : x + 1]], axis=1)
    rows /= rows.sum(axis=1, keepdims=True)
    return TransitionMatrix(n, rows)


def complement(g: int, n_sites: int) -> int:
    """Global spin flip, ``g circ M``."""
    g = check_element(g, n_sites)
    return ((g - 1) ^ ((1 << n_sites) - 1)) + 1


def rotate_ring(masks: np.ndarray, n_sites: int, shift: int = 1) -> np.ndarray:
    """Move the spin at site ``i`` to site ``i + shift`` (mod N) for ring masks."""
    masks = np.asarray(masks, dtype=np.int64)
    shift %= n_sites
    full = (1 << n_sites) - 1
    return ((masks << shift) | (masks >> (n_sites - shift))) & full


def _bisect(params: SpinModelParams, lo: float, hi: float, t_lo: np.ndarray, t_hi: np.ndarray, tol: float):
    out = []
    stack = [(lo, hi, t_lo, t_hi)]
    while stack:
        lo, hi, t_lo, t_hi = stack.pop()
        if hi - lo <= tol:
            out.append((lo, hi, t_lo, t_hi))
            continue
        mid = 0.5 * (lo + hi)
        t_mid = _quiet_successors(params.with_alpha(mid))
        if not np.array_equal(t_mid, t_hi):
            stack.append((mid, hi, t_mid, t_hi))
        if not np.array_equal(t_mid, t_lo):
            stack.append((lo, mid, t_lo, t_mid))
    return sorted(out, key=lambda item: item[0])


def _quiet_successors(params: SpinModelParams) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TieWarning)
        return frozen_successors(params)[0]


def regime_report(
    L: int,
    d: int,
    alphas,
    states=None,
    radius: int = 1,
    tol: float = 1e-9,
) -> dict:
    """Frozen-phase sweep over a grid of ``alpha`` values.

    For every grid point: the frozen map, its cycle spectrum, and ``phi`` and
    the period of each state in ``states``.  Wherever the successor map
    differs between neighboring grid points the change point is located by
    bisection to ``tol``; several changes inside one grid cell are all
    resolved.  Each threshold lists the states whose ``phi`` value changes
    across it.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise DomainError("empty alpha grid")
    if sorted(alphas) != alphas:
        raise DomainError("alpha grid must be increasing")
    base = SpinModelParams(L, d, alphas[0], math.inf, radius)
    n = base.N
    states = [check_element(g, n) for g in (states or [])]

    points = []
    succ_at = []
    for a in alphas:
        params = base.with_alpha(a)
        # ties are reported per grid point below rather than warned about
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TieWarning)
            succ, tied = frozen_successors(params)
        succ_at.append(succ)
        phi = ShufflingMap(n, np.arange(succ.size) ^ succ)
        report = analyze(phi)
        points.append(
            {
                "alpha": a,
                "ties": int(tied.size),
                "spectrum": {str(k): v for k, v in report.spectrum.items()},
                "states": {
                    str(g): {
                        "phi": phi(g),
                        "p_star": "transient" if not report.period[g - 1] else int(report.period[g - 1]),
                    }
                    for g in states
                },
            }
        )

    thresholds = []
    for i in range(len(alphas) - 1):
        if np.array_equal(succ_at[i], succ_at[i + 1]):
            continue
        for lo, hi, t_lo, t_hi in _bisect(base, alphas[i], alphas[i + 1], succ_at[i], succ_at[i + 1], tol):
            idx = np.arange(t_lo.size)
            changed = np.flatnonzero((idx ^ t_lo) != (idx ^ t_hi)) + 1
            thresholds.append(
                {
                    "alpha": round(0.5 * (lo + hi), 9),
                    "bracket": [lo, hi],
                    "changed_states": [g for g in states if g in set(changed.tolist())],
                    "n_changed": int(changed.size),
                }
            )
    return {"L": L, "d": d, "N": n, "radius": radius, "thresholds": thresholds, "grid": points}
