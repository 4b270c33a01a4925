import json

import numpy as np
import pytest

import truncator.sweeps as sweeps
from truncator import CapacityError, DomainError
from truncator.sweeps import THEOREMS, SweepResult, gamma_lucas_check, run_sweep

RECORD_KEYS = {"theorem", "M", "phi", "g", "expected", "observed"}


@pytest.mark.parametrize("theorem", THEOREMS)
@pytest.mark.parametrize("size", [2, 4])
def test_exhaustive_small(theorem, size):
    res = run_sweep(theorem, size)
    assert res.passed, list(res.counterexample_lines())[:3]
    expected = 2 ** (res.size.bit_length() - 1) ** 2 if theorem == "3" else size**size
    assert res.maps_checked == expected


def test_m4_statistics():
    # frozen from the brute-force oracle in test_map_space
    s1 = run_sweep("1", 4).stats
    assert s1["circ_homomorphisms"] == 16
    assert s1["star_homomorphisms"] == 16
    assert s1["surjective_star_homomorphisms"] == 6
    assert run_sweep("2", 4).stats["star_commutative"] == 4
    sp = run_sweep("period", 4).stats
    assert sp["predicted_1"] == 256
    assert sp["converse_2_misses"] == 0 and sp["converse_3_misses"] == 0


def test_sampled_is_reproducible_and_jobs_independent():
    a = run_sweep("gast4", 16, samples=5000, seed=3, jobs=1)
    b = run_sweep("gast4", 16, samples=5000, seed=3, jobs=2)
    assert a.passed and a.maps_checked == 5000
    assert a.summary() == b.summary()


def test_sampled_homomorphisms():
    res = run_sweep("3", 256, samples=300, seed=1)
    assert res.passed and res.family == "sampled homomorphisms"


def test_capacity_and_domain():
    with pytest.raises(CapacityError):
        run_sweep("1", 8)
    with pytest.raises(CapacityError):
        run_sweep("gast4", 16)
    with pytest.raises(CapacityError):
        run_sweep("3", 32)
    with pytest.raises(DomainError):
        run_sweep("9", 4)
    with pytest.raises(DomainError):
        run_sweep("1", 6)


def test_gamma_lucas_check_clean():
    assert gamma_lucas_check(64) == []


def test_failures_are_detected_and_recorded():
    # the polynomial form only holds for homomorphisms, so a non-linear map must be flagged
    res = SweepResult("3", 4, "probe")
    sweeps._check_theorem3(np.array([[3, 2, 1, 0], [0, 1, 2, 3]], dtype=np.uint8), res)
    assert res.failure_count == 1
    rec = json.loads(next(res.counterexample_lines()))
    assert set(rec) == RECORD_KEYS
    assert rec["phi"] == [4, 3, 2, 1]


def test_period_sweep_flags_wrong_predictions(monkeypatch):
    real = sweeps.period_clauses

    def lying(t):
        out = real(t)
        out["predicted"] = np.where(out["predicted"] == 0, 3, out["predicted"]).astype(np.int8)
        return out

    monkeypatch.setattr(sweeps, "period_clauses", lying)
    res = run_sweep("period", 4)
    assert not res.passed
    assert all(set(json.loads(line)) == RECORD_KEYS for line in res.counterexample_lines())


def test_record_limit():
    res = SweepResult("3", 4, "probe")
    tables = np.tile(np.array([3, 2, 1, 0], dtype=np.uint8), (sweeps.RECORD_LIMIT + 50, 1))
    sweeps._check_theorem3(tables, res)
    assert res.failure_count == sweeps.RECORD_LIMIT + 50
    assert len(res.failures) == sweeps.RECORD_LIMIT
