"""Random maps: product measures, kernel statistics and the annealed chain.

A :class:`MapMeasure` assigns every element ``g`` an independent law
``nu_g`` for ``phi(g)``.  Under it, ``T(i) = i circ phi(i)`` depends on
``phi(i)`` alone, so the one-step kernel is ``Phi[i, j] = nu_i(i circ j)``.
The annealed chain draws a fresh map at every step; since only ``phi`` of
the current state is ever read, simulations draw just that entry, which has
the same law as drawing the whole map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .algebra import ShufflingMap
from .exceptions import DomainError
from .parallel import DEFAULT_BLOCK, block_rng, blocks, run_map
from .validation import (
    MAX_DENSE_BITS,
    check_element,
    check_int,
    check_n_bits,
    check_seed,
    check_stochastic,
)

__all__ = [
    "MapMeasure",
    "TransitionMatrix",
    "ReturnTimeDistribution",
    "KernelHistogram",
    "ChapmanReport",
    "uniform_measure",
    "point_mass_measure",
    "random_measure",
    "sample_map",
    "sample_maps",
    "kernel_sizes",
    "kernel_pmf_exact",
    "kernel_pmf_limit",
    "kernel_histogram",
    "phi_matrix",
    "step_matrix",
    "annealed_step_law_check",
    "increment_chain_law",
    "increment_chain_monte_carlo",
    "increment_chain_comparison",
    "kernel_passage_time",
    "return_time_distribution",
]

# RNG stream ids, one per observable
_STREAM_KERNEL = 1
_STREAM_CHAPMAN = 2
_STREAM_INCREMENT = 3
_STREAM_RETURN = 4


def _check_dense(n_bits: int) -> int:
    return check_n_bits(n_bits, cap=MAX_DENSE_BITS)


@dataclass(frozen=True, eq=False)
class MapMeasure:
    """Product measure on maps: row ``g - 1`` of ``nu`` is the law of ``phi(g)``."""

    n_bits: int
    nu: np.ndarray

    def __post_init__(self):
        n_bits = _check_dense(self.n_bits)
        nu = check_stochastic(self.nu, "nu").copy()
        if nu.shape[0] != 1 << n_bits:
            raise DomainError(f"nu must be {1 << n_bits} x {1 << n_bits}, got {nu.shape}")
        nu.setflags(write=False)
        object.__setattr__(self, "n_bits", n_bits)
        object.__setattr__(self, "nu", nu)

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "nu": self.nu.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "MapMeasure":
        if not isinstance(data, dict) or "n_bits" not in data or "nu" not in data:
            raise DomainError('measure JSON must be an object with keys "n_bits" and "nu"')
        return cls(check_int(data["n_bits"], "n_bits", minimum=0), np.asarray(data["nu"], dtype=np.float64))

    @classmethod
    def from_json(cls, text: str) -> "MapMeasure":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"invalid measure JSON: {exc}") from None

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.nu, axis=1)
        c[:, -1] = 1.0
        return c


def uniform_measure(n_bits: int) -> MapMeasure:
    size = 1 << _check_dense(n_bits)
    return MapMeasure(n_bits, np.full((size, size), 1.0 / size))


def point_mass_measure(phi: ShufflingMap) -> MapMeasure:
    _check_dense(phi.n_bits)
    nu = np.zeros((phi.size, phi.size))
    nu[np.arange(phi.size), phi.masks.astype(np.int64)] = 1.0
    return MapMeasure(phi.n_bits, nu)


def random_measure(n_bits: int, rng: np.random.Generator, concentration: float = 1.0) -> MapMeasure:
    """Rows drawn from a symmetric Dirichlet law."""
    size = 1 << _check_dense(n_bits)
    nu = rng.dirichlet(np.full(size, float(concentration)), size=size)
    nu /= nu.sum(axis=1, keepdims=True)
    return MapMeasure(n_bits, nu)


def _draw(cdf_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    # index of the first cdf entry strictly above u
    return np.minimum((u[:, None] >= cdf_rows).sum(axis=1), cdf_rows.shape[1] - 1)


def sample_maps(mu: MapMeasure, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent maps as a ``(count, M)`` array of 0-based masks."""
    count = check_int(count, "count", minimum=0)
    cdf = mu.cdf()
    u = rng.random((count, mu.size))
    out = np.empty((count, mu.size), dtype=np.int64)
    for g in range(mu.size):
        out[:, g] = np.minimum(np.searchsorted(cdf[g], u[:, g], side="right"), mu.size - 1)
    return out


def sample_map(mu: MapMeasure, rng: np.random.Generator) -> ShufflingMap:
    return ShufflingMap(mu.n_bits, sample_maps(mu, 1, rng)[0])


def kernel_sizes(masks: np.ndarray) -> np.ndarray:
    """``|ker phi|`` for each row of a ``(count, M)`` mask array."""
    return (np.asarray(masks) == 0).sum(axis=-1)


def kernel_pmf_exact(size: int, k: int) -> float:
    """Probability that a uniformly random map on ``size`` points has ``k`` kernel elements.

    ``C(M, k) M**-M (M - 1)**(M - k)``, evaluated in log space.
    """
    size = check_int(size, "M", minimum=1)
    k = check_int(k, "k")
    if not 0 <= k <= size:
        raise DomainError(f"k must lie in [0, {size}], got {k}")
    if size == 1:
        return 1.0 if k == 1 else 0.0
    log_p = (
        math.lgamma(size + 1)
        - math.lgamma(k + 1)
        - math.lgamma(size - k + 1)
        - size * math.log(size)
        + (size - k) * math.log(size - 1)
    )
    return math.exp(log_p)


def kernel_pmf_limit(k: int) -> float:
    """Poisson(1) mass ``1 / (e k!)``."""
    k = check_int(k, "k", minimum=0)
    return math.exp(-1.0 - math.lgamma(k + 1))


@dataclass(frozen=True)
class KernelHistogram:
    """Kernel-size histogram of ``samples`` uniform maps against the exact law.

    ``stderr[k]`` is the binomial standard error of a bin frequency under the
    exact probability.
    """

    size: int
    samples: int
    counts: np.ndarray
    exact: np.ndarray
    limit: np.ndarray

    @property
    def estimate(self) -> np.ndarray:
        if self.samples == 0:
            return np.full(self.exact.shape, np.nan)
        return self.counts / self.samples

    @property
    def stderr(self) -> np.ndarray:
        if self.samples == 0:
            return np.full(self.exact.shape, np.nan)
        return np.sqrt(self.exact * (1 - self.exact) / self.samples)

    def z_scores(self) -> np.ndarray:
        err = self.stderr
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.estimate - self.exact) / err
        z[(err == 0) & (self.estimate == self.exact)] = 0.0
        return z

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        est, err = self.estimate, self.stderr
        return [
            (k, float(self.exact[k]), float(self.limit[k]), float(est[k]), float(err[k]))
            for k in range(self.size + 1)
        ]


def _kernel_block(n_bits: int, seed: int, block: int, count: int) -> np.ndarray:
    size = 1 << n_bits
    rng = block_rng(seed, _STREAM_KERNEL, block)
    masks = rng.integers(0, size, size=(count, size), dtype=np.int64)
    return np.bincount(kernel_sizes(masks), minlength=size + 1)


def kernel_histogram(n_bits: int, samples: int, seed: int, jobs: int = 1) -> KernelHistogram:
    """Histogram of ``|ker phi|`` over ``samples`` uniform maps on ``M = 2**n_bits`` points."""
    n_bits = check_n_bits(n_bits, cap=16)
    samples = check_int(samples, "samples", minimum=0)
    seed = check_seed(seed)
    size = 1 << n_bits
    block_size = max(1, DEFAULT_BLOCK // max(1, size // 16))
    args = [(n_bits, seed, b, count) for b, _, count in blocks(samples, block_size)]
    counts = np.zeros(size + 1, dtype=np.int64)
    for part in run_map(_kernel_block, args, jobs):
        counts += part
    exact = np.array([kernel_pmf_exact(size, k) for k in range(size + 1)])
    limit = np.array([kernel_pmf_limit(k) for k in range(size + 1)])
    return KernelHistogram(size, samples, counts, exact, limit)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic ``M x M`` matrix over element masks."""

    n_bits: int
    matrix: np.ndarray

    def __post_init__(self):
        n_bits = _check_dense(self.n_bits)
        arr = check_stochastic(self.matrix).copy()
        if arr.shape[0] != 1 << n_bits:
            raise DomainError(f"matrix must be {1 << n_bits} x {1 << n_bits}, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "n_bits", n_bits)
        object.__setattr__(self, "matrix", arr)

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    def power(self, p: int) -> np.ndarray:
        """``Phi**p`` by repeated multiplication."""
        p = check_int(p, "p", minimum=0)
        out = np.eye(self.size)
        for _ in range(p):
            out = out @ self.matrix
        return out

    def powers(self, p_max: int) -> list[np.ndarray]:
        """``[Phi**0, Phi**1, ..., Phi**p_max]``."""
        out = [np.eye(self.size)]
        for _ in range(p_max):
            out.append(out[-1] @ self.matrix)
        return out

    def is_deterministic(self) -> bool:
        return bool(np.all((self.matrix == 1.0).sum(axis=1) == 1))

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "matrix": self.matrix.tolist()}


def phi_matrix(mu: MapMeasure) -> TransitionMatrix:
    """``Phi[i, j] = P(i * i = j) = nu_i(i circ j)``."""
    r = np.arange(mu.size)
    return TransitionMatrix(mu.n_bits, mu.nu[r[:, None], r[:, None] ^ r[None, :]])


def step_matrix(phi: ShufflingMap) -> TransitionMatrix:
    """0/1 matrix of the deterministic step ``T``."""
    _check_dense(phi.n_bits)
    m = np.zeros((phi.size, phi.size))
    m[np.arange(phi.size), phi.step_masks().astype(np.int64)] = 1.0
    return TransitionMatrix(phi.n_bits, m)


def _z_matrix(counts: np.ndarray, n: np.ndarray, expected: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64).reshape(-1, 1) if np.ndim(n) else float(n)
    var = n * expected * (1 - expected)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(counts - n * expected) / np.sqrt(var)
    degenerate = var == 0
    z[degenerate & (counts == n * expected)] = 0.0
    z[degenerate & (counts != n * expected)] = np.inf
    return z


@dataclass(frozen=True)
class ChapmanReport:
    """Empirical two-step annealed transitions against ``Phi @ Phi``."""

    trials: int
    starts: np.ndarray  # trials started from each state
    counts: np.ndarray  # counts[i, j]: runs from i that sit at j after two steps
    expected: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        return _z_matrix(self.counts, self.starts, self.expected)

    @property
    def max_z(self) -> float:
        return float(self.z_scores.max())

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_z": self.max_z,
            "expected": self.expected.tolist(),
            "empirical": (self.counts / self.starts[:, None]).tolist(),
        }


def _chapman_block(nu: np.ndarray, seed: int, block: int, start: int, count: int) -> np.ndarray:
    size = nu.shape[0]
    rng = block_rng(seed, _STREAM_CHAPMAN, block)
    cdf = np.cumsum(nu, axis=1)
    cdf[:, -1] = 1.0
    state = (start + np.arange(count)) % size
    for _ in range(2):
        state = state ^ _draw(cdf[state], rng.random(count))
    origin = (start + np.arange(count)) % size
    return np.bincount(origin * size + state, minlength=size * size).reshape(size, size)


def annealed_step_law_check(mu: MapMeasure, trials: int, seed: int, jobs: int = 1) -> ChapmanReport:
    """Simulate ``i -> i**2 -> i**3`` with an independent map at each step.

    Trial ``t`` starts from mask ``t mod M``.  The empirical law after two
    steps is compared entrywise with ``Phi @ Phi``.
    """
    trials = check_int(trials, "trials", minimum=10_000)
    seed = check_seed(seed)
    size = mu.size
    args = [(mu.nu, seed, b, lo, count) for b, lo, count in blocks(trials)]
    counts = np.zeros((size, size), dtype=np.int64)
    for part in run_map(_chapman_block, args, jobs):
        counts += part
    starts = np.bincount(np.arange(trials) % size, minlength=size)
    expected = phi_matrix(mu).power(2)
    return ChapmanReport(trials, starts, counts, expected)


def _xor_convolve(dist: np.ndarray, row: np.ndarray) -> np.ndarray:
    r = np.arange(dist.size)
    return dist @ row[r[:, None] ^ r[None, :]]


def increment_chain_law(g: int, p: int, mu: MapMeasure) -> np.ndarray:
    """Law of the partial product ``g circ X_1 circ ... circ X_p`` (indexed by mask).

    The increments are independent with ``X_k`` distributed as row ``g`` of
    ``Phi**k``; this applies the inhomogeneous kernels
    ``K_k(a, b) = (Phi**k)[g, a circ b]`` in turn to the point mass at ``g``.
    """
    g = check_element(g, mu.n_bits)
    p = check_int(p, "p", minimum=1)
    powers = phi_matrix(mu).powers(p)
    dist = np.zeros(mu.size)
    dist[g - 1] = 1.0
    for k in range(1, p + 1):
        dist = _xor_convolve(dist, powers[k][g - 1])
    return dist


INCREMENT_SEMANTICS = ("fresh", "trajectory", "quenched")


def _increment_block(
    nu: np.ndarray, g0: int, p: int, semantics: str, seed: int, block: int, count: int
) -> np.ndarray:
    size = nu.shape[0]
    rng = block_rng(seed, _STREAM_INCREMENT, block)
    cdf = np.cumsum(nu, axis=1)
    cdf[:, -1] = 1.0
    total = np.full(count, g0, dtype=np.int64)
    if semantics == "fresh":
        # X_k from its own k-step chain, independent across k
        for k in range(1, p + 1):
            state = np.full(count, g0, dtype=np.int64)
            for _ in range(k):
                state = state ^ _draw(cdf[state], rng.random(count))
            total ^= state
    elif semantics == "trajectory":
        state = np.full(count, g0, dtype=np.int64)
        for _ in range(p):
            state = state ^ _draw(cdf[state], rng.random(count))
            total ^= state
    else:
        u = rng.random((count, size))
        maps = np.empty((count, size), dtype=np.int64)
        for h in range(size):
            maps[:, h] = np.minimum(np.searchsorted(cdf[h], u[:, h], side="right"), size - 1)
        rows = np.arange(count)
        state = np.full(count, g0, dtype=np.int64)
        for _ in range(p):
            state = state ^ maps[rows, state]
            total ^= state
    return np.bincount(total, minlength=size)


def increment_chain_monte_carlo(
    g: int,
    p: int,
    mu: MapMeasure,
    trials: int,
    seed: int,
    semantics: str = "fresh",
    jobs: int = 1,
) -> np.ndarray:
    """Counts of the simulated partial product ``XOR_{k=0..p} T**k(g)`` by mask.

    ``semantics`` selects how maps are drawn: ``"fresh"`` gives every term
    ``T**k(g)`` its own independent sequence of maps (the law of
    :func:`increment_chain_law`); ``"trajectory"`` follows one annealed path
    with a new map per step; ``"quenched"`` uses a single map per trial.
    """
    g = check_element(g, mu.n_bits)
    p = check_int(p, "p", minimum=1)
    trials = check_int(trials, "trials", minimum=1)
    seed = check_seed(seed)
    if semantics not in INCREMENT_SEMANTICS:
        raise DomainError(f"semantics must be one of {INCREMENT_SEMANTICS}, got {semantics!r}")
    args = [(mu.nu, g - 1, p, semantics, seed, b, count) for b, _, count in blocks(trials)]
    counts = np.zeros(mu.size, dtype=np.int64)
    for part in run_map(_increment_block, args, jobs):
        counts += part
    return counts


def increment_chain_comparison(g: int, p: int, mu: MapMeasure, trials: int, seed: int, jobs: int = 1) -> dict:
    """Exact independent-increment law against all three simulation semantics.

    Informational: only ``"fresh"`` is expected to match the exact law.
    """
    law = increment_chain_law(g, p, mu)
    out = {"g": g, "p": p, "trials": trials, "exact": law.tolist(), "semantics": {}}
    for semantics in INCREMENT_SEMANTICS:
        counts = increment_chain_monte_carlo(g, p, mu, trials, seed, semantics, jobs)
        z = _z_matrix(counts[None, :], np.array([trials]), law[None, :])[0]
        freq = counts / trials
        out["semantics"][semantics] = {
            "empirical": freq.tolist(),
            "max_z": float(z.max()),
            "total_variation": float(0.5 * np.abs(freq - law).sum()),
        }
    return out


def kernel_passage_time(g: int, phi: ShufflingMap, horizon: int | None = None) -> float | int:
    """First ``p >= 1`` with ``phi(XOR_{k<p} T**k(g)) = 1``, else ``inf``.

    For a group homomorphism this equals the period of ``g``; for other maps
    it is a different quantity.
    """
    g = check_element(g, phi.n_bits)
    horizon = phi.size if horizon is None else check_int(horizon, "horizon", minimum=1)
    t = phi.masks.astype(np.int64)
    state = g - 1
    acc = 0
    for p in range(1, horizon + 1):
        acc ^= state
        if t[acc] == 0:
            return p
        state ^= int(t[state])
    return math.inf


@dataclass(frozen=True)
class ReturnTimeDistribution:
    """First-return law of the annealed chain to its start state.

    Index ``p - 1`` of ``exact``/``estimate`` holds the probability of first
    return at step ``p``; the residuals hold the mass beyond ``horizon``.
    """

    g: int
    horizon: int
    trials: int
    exact: np.ndarray
    exact_residual: float
    counts: np.ndarray

    @property
    def estimate(self) -> np.ndarray:
        return self.counts / self.trials if self.trials else np.full(self.horizon, np.nan)

    @property
    def estimate_residual(self) -> float:
        return 1.0 - float(self.counts.sum()) / self.trials if self.trials else math.nan

    def z_scores(self) -> np.ndarray:
        if not self.trials:
            return np.zeros(self.horizon)
        return _z_matrix(self.counts[None, :], np.array([self.trials]), self.exact[None, :])[0]

    def to_dict(self) -> dict:
        est = self.estimate
        stderr = np.sqrt(self.exact * (1 - self.exact) / self.trials) if self.trials else None
        return {
            "g": self.g,
            "horizon": self.horizon,
            "trials": self.trials,
            "rows": [
                {
                    "p": p + 1,
                    "exact": float(self.exact[p]),
                    "estimate": None if not self.trials else float(est[p]),
                    "stderr": None if stderr is None else float(stderr[p]),
                }
                for p in range(self.horizon)
            ],
            "residual": {
                "exact": self.exact_residual,
                "estimate": None if not self.trials else self.estimate_residual,
            },
        }


def first_return_law(matrix: np.ndarray, start: int, horizon: int) -> tuple[np.ndarray, float]:
    """Taboo recursion for the first return of a chain to ``start`` (a mask)."""
    mass = np.zeros(matrix.shape[0])
    mass[start] = 1.0
    law = np.zeros(horizon)
    for p in range(horizon):
        mass = mass @ matrix
        law[p] = mass[start]
        mass[start] = 0.0
    return law, max(0.0, 1.0 - float(law.sum()))


def _return_block(nu: np.ndarray, g0: int, horizon: int, seed: int, block: int, count: int) -> np.ndarray:
    rng = block_rng(seed, _STREAM_RETURN, block)
    cdf = np.cumsum(nu, axis=1)
    cdf[:, -1] = 1.0
    state = np.full(count, g0, dtype=np.int64)
    alive = np.ones(count, dtype=bool)
    counts = np.zeros(horizon, dtype=np.int64)
    for p in range(horizon):
        u = rng.random(count)
        state = state ^ _draw(cdf[state], u)
        hit = alive & (state == g0)
        counts[p] = hit.sum()
        alive &= ~hit
    return counts


def return_time_distribution(
    g: int, mu: MapMeasure, horizon: int, trials: int, seed: int, jobs: int = 1
) -> ReturnTimeDistribution:
    """Return time of the annealed chain to ``g``: taboo recursion beside Monte Carlo."""
    g = check_element(g, mu.n_bits)
    horizon = check_int(horizon, "horizon", minimum=1)
    trials = check_int(trials, "trials", minimum=0)
    seed = check_seed(seed)
    exact, residual = first_return_law(phi_matrix(mu).matrix, g - 1, horizon)
    args = [(mu.nu, g - 1, horizon, seed, b, count) for b, _, count in blocks(trials)]
    counts = np.zeros(horizon, dtype=np.int64)
    for part in run_map(_return_block, args, jobs):
        counts += part
    return ReturnTimeDistribution(g, horizon, trials, exact, residual, counts)
