import itertools
import json
import math

import numpy as np
import pytest

import oracles as o
from truncator import CapacityError, DomainError, ShufflingMap
from truncator.map_space import all_homomorphisms
from truncator.orbits import analyze
from truncator.random_maps import (
    MapMeasure,
    TransitionMatrix,
    annealed_step_law_check,
    first_return_law,
    increment_chain_comparison,
    increment_chain_law,
    increment_chain_monte_carlo,
    kernel_histogram,
    kernel_passage_time,
    kernel_pmf_exact,
    kernel_pmf_limit,
    kernel_sizes,
    phi_matrix,
    point_mass_measure,
    random_measure,
    return_time_distribution,
    sample_map,
    sample_maps,
    step_matrix,
    uniform_measure,
)


@pytest.fixture(scope="module")
def mu4():
    return random_measure(2, np.random.default_rng(11))


def weighted_maps(mu):
    """Every map on M points with its product-measure probability."""
    M = mu.size
    for table in o.all_maps(M):
        w = math.prod(mu.nu[g, table[g] - 1] for g in range(M))
        yield table, w


def test_kernel_pmf_exact_against_fractions():
    for M in (2, 4, 16, 64, 1024):
        total = 0.0
        for k in range(M + 1):
            p = kernel_pmf_exact(M, k)
            assert p == pytest.approx(float(o.kernel_pmf(M, k)), rel=1e-10, abs=1e-300)
            total += p
        assert total == pytest.approx(1.0, abs=1e-12)


def test_kernel_pmf_exact_against_enumeration():
    pmf = o.kernel_pmf_by_enumeration(4)
    # frozen: 81, 108, 54, 12, 1 maps out of 256
    assert [p * 256 for p in pmf] == [81, 108, 54, 12, 1]
    for k, p in enumerate(pmf):
        assert kernel_pmf_exact(4, k) == pytest.approx(float(p), rel=1e-12)


def test_kernel_pmf_edges():
    assert kernel_pmf_exact(1, 1) == 1.0
    assert kernel_pmf_exact(1, 0) == 0.0
    with pytest.raises(DomainError):
        kernel_pmf_exact(4, 5)
    assert kernel_pmf_limit(0) == pytest.approx(1 / math.e)
    assert kernel_pmf_limit(3) == pytest.approx(1 / (6 * math.e))


def test_kernel_histogram_reproducible_and_jobs_independent():
    a = kernel_histogram(3, 150_000, seed=9, jobs=1)
    b = kernel_histogram(3, 150_000, seed=9, jobs=2)
    c = kernel_histogram(3, 150_000, seed=10, jobs=1)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)
    assert a.counts.sum() == 150_000
    assert a.z_scores().max() < 5


def test_kernel_histogram_exact_only():
    h = kernel_histogram(2, 0, seed=1)
    assert len(h.rows()) == 5
    assert all(math.isnan(r[3]) for r in h.rows())


def test_kernel_histogram_capacity():
    with pytest.raises(CapacityError):
        kernel_histogram(17, 10, seed=1)


def test_measure_validation_and_json():
    with pytest.raises(DomainError):
        MapMeasure(1, np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(DomainError):
        MapMeasure(2, np.full((2, 2), 0.5))
    with pytest.raises(DomainError):
        MapMeasure.from_json('{"nu": []}')
    mu = random_measure(2, np.random.default_rng(1))
    back = MapMeasure.from_json(json.dumps(mu.to_dict()))
    assert np.array_equal(back.nu, mu.nu)


def test_sample_maps_frequencies(mu4):
    rng = np.random.default_rng(3)
    draws = sample_maps(mu4, 200_000, rng)
    for g in range(4):
        freq = np.bincount(draws[:, g], minlength=4) / 200_000
        assert np.allclose(freq, mu4.nu[g], atol=0.005)
    assert isinstance(sample_map(mu4, rng), ShufflingMap)
    assert np.array_equal(kernel_sizes(np.array([[0, 0, 1], [1, 2, 3]])), [2, 0])


def test_phi_matrix_against_enumeration(mu4):
    expected = np.zeros((4, 4))
    for table, w in weighted_maps(mu4):
        for i in range(1, 5):
            expected[i - 1, o.T(i, table) - 1] += w
    assert np.allclose(phi_matrix(mu4).matrix, expected, atol=1e-12)


def test_phi_matrix_point_mass_is_step_matrix():
    phi = ShufflingMap.from_labels([3, 1, 4, 4, 2, 7, 8, 5])
    m = phi_matrix(point_mass_measure(phi))
    assert m.is_deterministic()
    assert np.array_equal(m.matrix, step_matrix(phi).matrix)


def test_uniform_phi_matrix_is_uniform():
    assert np.allclose(phi_matrix(uniform_measure(3)).matrix, 1 / 8)


def test_transition_matrix_powers(mu4):
    m = phi_matrix(mu4)
    pw = m.powers(5)
    for p in range(6):
        assert np.allclose(pw[p], np.linalg.matrix_power(m.matrix, p))
        assert np.allclose(m.power(p), pw[p])
    with pytest.raises(DomainError):
        TransitionMatrix(1, np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_two_step_law_against_enumeration(mu4):
    # two independent maps, one per step
    expected = np.zeros((4, 4))
    weighted = list(weighted_maps(mu4))
    for (t1, w1), (t2, w2) in itertools.product(weighted, repeat=2):
        for i in range(1, 5):
            expected[i - 1, o.T(o.T(i, t1), t2) - 1] += w1 * w2
    assert np.allclose(phi_matrix(mu4).power(2), expected, atol=1e-12)


def test_annealed_step_law_small(mu4):
    rep = annealed_step_law_check(mu4, 40_000, seed=4)
    assert rep.starts.sum() == 40_000
    assert rep.max_z < 5
    again = annealed_step_law_check(mu4, 40_000, seed=4, jobs=2)
    assert np.array_equal(rep.counts, again.counts)
    with pytest.raises(DomainError):
        annealed_step_law_check(mu4, 100, seed=4)


def test_first_return_law_against_paths(mu4):
    P = phi_matrix(mu4).matrix
    horizon = 5
    for start in range(4):
        law, residual = first_return_law(P, start, horizon)
        for p in range(1, horizon + 1):
            total = 0.0
            for mid in itertools.product([s for s in range(4) if s != start], repeat=p - 1):
                path = (start,) + mid + (start,)
                total += math.prod(P[a, b] for a, b in zip(path, path[1:]))
            assert law[p - 1] == pytest.approx(total, abs=1e-12)
        assert residual == pytest.approx(1 - law.sum(), abs=1e-12)


def test_return_time_monte_carlo(mu4):
    dist = return_time_distribution(3, mu4, horizon=8, trials=60_000, seed=7)
    assert dist.z_scores().max() < 5
    again = return_time_distribution(3, mu4, horizon=8, trials=60_000, seed=7, jobs=2)
    assert np.array_equal(dist.counts, again.counts)
    d = dist.to_dict()
    assert len(d["rows"]) == 8 and d["rows"][0]["p"] == 1


def test_return_time_deterministic_cycle():
    # point mass on a map whose step is a 2-cycle {6, 11} in the N=4 group
    table = [1] * 16
    table[5] = o.mul(6, 11, 4)
    table[10] = o.mul(11, 6, 4)
    dist = return_time_distribution(6, point_mass_measure(ShufflingMap.from_labels(table)), 4, 10, seed=0)
    assert dist.exact.tolist() == [0.0, 1.0, 0.0, 0.0]
    assert dist.counts.tolist() == [0, 10, 0, 0]


def test_increment_chain_law_matches_fresh_draws():
    mu = random_measure(3, np.random.default_rng(21))
    for p in (1, 2, 3):
        law = increment_chain_law(5, p, mu)
        assert law.sum() == pytest.approx(1.0)
        counts = increment_chain_monte_carlo(5, p, mu, 60_000, seed=p)
        z = np.abs(counts - 60_000 * law) / np.sqrt(60_000 * law * (1 - law) + 1e-300)
        assert z.max() < 5


def test_increment_chain_law_first_step_is_phi_row():
    mu = random_measure(2, np.random.default_rng(2))
    Phi = phi_matrix(mu).matrix
    for g in range(1, 5):
        law = increment_chain_law(g, 1, mu)
        expected = np.array([Phi[g - 1, (g - 1) ^ j] for j in range(4)])
        assert np.allclose(law, expected)


def test_increment_semantics():
    mu = random_measure(2, np.random.default_rng(2))
    out = increment_chain_comparison(2, 3, mu, 20_000, seed=1)
    assert set(out["semantics"]) == {"fresh", "trajectory", "quenched"}
    with pytest.raises(DomainError):
        increment_chain_monte_carlo(2, 3, mu, 10, seed=1, semantics="bogus")


def test_kernel_passage_time_is_period_for_homomorphisms():
    for phi in all_homomorphisms(3):
        rep = analyze(phi)
        for g in range(1, 9):
            assert kernel_passage_time(g, phi) == rep.period_of(g)


def test_kernel_passage_time_differs_off_homomorphisms():
    phi = ShufflingMap.from_labels([4, 3, 2, 1])
    rep = analyze(phi)
    assert any(kernel_passage_time(g, phi) != rep.period_of(g) for g in range(1, 5))
