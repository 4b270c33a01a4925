import json
import subprocess
import sys

import pytest

from truncator.cli import SCHEMA, build_parser, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema"] == SCHEMA
    return doc


@pytest.fixture
def map_file(tmp_path):
    def write(labels, n_bits=None):
        n_bits = n_bits if n_bits is not None else len(labels).bit_length() - 1
        path = tmp_path / f"map{len(labels)}_{labels[0]}.json"
        path.write_text(json.dumps({"n_bits": n_bits, "phi": labels}))
        return str(path)

    return write


def test_orbits_complex_map(map_file, capsys):
    doc = run_json(["orbits", "--map", map_file([4, 3, 2, 1])], capsys)
    res = doc["result"]
    assert res["attractors"] == [{"cycle": [4], "length": 1, "basin": 4}]
    assert res["spectrum"] == {"1": 1}


def test_orbits_identity(map_file, capsys):
    doc = run_json(["orbits", "--map", map_file(list(range(1, 9)))], capsys)
    assert doc["result"]["attractors"] == [{"cycle": [1], "length": 1, "basin": 8}]


def test_orbits_spin(capsys):
    doc = run_json(["orbits", "--spin", "4,1,3.0"], capsys)
    cycles = [a["cycle"] for a in doc["result"]["attractors"] if a["length"] == 2]
    assert [6, 11] in cycles
    assert doc["config"]["spin"] == [4, 1, 3.0]


def test_orbits_malformed_map_names_entry(map_file, capsys):
    code, out, err = run(["orbits", "--map", map_file([4, 3, 9, 1])], capsys)
    assert code == 2 and out == ""
    assert "phi(3) = 9" in err


def test_orbits_missing_file(tmp_path, capsys):
    code, _, err = run(["orbits", "--map", str(tmp_path / "nope.json")], capsys)
    assert code == 2 and "cannot read" in err


def test_orbits_out_and_meta(map_file, tmp_path, capsys):
    out_path, meta_path = tmp_path / "o.json", tmp_path / "m.json"
    code, out, _ = run(["orbits", "--map", map_file([1, 1]), "--out", str(out_path), "--meta", str(meta_path)], capsys)
    assert code == 0 and out == ""
    assert json.loads(out_path.read_text())["command"] == "orbits"
    meta = json.loads(meta_path.read_text())
    assert {"timestamp", "version", "config", "argv"} <= set(meta)


@pytest.mark.parametrize("theorem", ["gast4", "2", "period"])
def test_verify_m4(theorem, capsys):
    doc = run_json(["verify", "--theorem", theorem, "--m", "4"], capsys)
    assert doc["result"]["passed"] and doc["result"]["maps_checked"] == 256


def test_verify_theorem3_m8(capsys):
    doc = run_json(["verify", "--theorem", "3", "--m", "8"], capsys)
    assert doc["result"]["maps_checked"] == 512 and doc["result"]["passed"]


def test_verify_capacity_exit(capsys):
    code, _, err = run(["verify", "--theorem", "1", "--m", "8"], capsys)
    assert code == 3 and "expensive" in err


def test_verify_bad_m(capsys):
    code, _, _ = run(["verify", "--theorem", "1", "--m", "6"], capsys)
    assert code == 2


def test_verify_failure_exit_and_counterexamples(monkeypatch, tmp_path, capsys):
    import numpy as np
    import truncator.sweeps as sweeps

    real = sweeps.period_clauses

    def lying(t):
        out = real(t)
        out["predicted"] = np.full_like(out["predicted"], 2)
        return out

    monkeypatch.setattr(sweeps, "period_clauses", lying)
    path = tmp_path / "cx.jsonl"
    code, out, _ = run(["verify", "--theorem", "period", "--m", "2", "--counterexamples", str(path)], capsys)
    assert code == 1
    assert json.loads(out)["result"]["passed"] is False
    lines = path.read_text().splitlines()
    assert lines and all(json.loads(line)["theorem"].startswith("period") for line in lines)


def test_random_kernel_hist_exact_only(capsys):
    code, out, _ = run(["random", "--n", "2", "--samples", "0", "--kernel-hist"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# schema: {SCHEMA}"
    assert lines[2] == "k,exact,limit,estimate,stderr"
    rows = [line.split(",") for line in lines[3:]]
    assert len(rows) == 5
    assert all(r[3] == "" and r[4] == "" for r in rows)
    assert float(rows[4][1]) == pytest.approx(1 / 256)


def test_random_return_time_reproducible(capsys):
    argv = ["random", "--n", "3", "--return-time", "5", "--samples", "20000", "--seed", "7"]
    first = run(argv, capsys)[1]
    second = run(argv + ["--jobs", "2"], capsys)[1]
    assert first == second
    doc = json.loads(first)
    assert doc["config"]["seed"] == 7 and "jobs" not in doc["config"]
    assert len(doc["result"]["rows"]) == 16


def test_random_chapman_and_increment(capsys):
    doc = run_json(["random", "--n", "2", "--samples", "20000", "--chapman", "--random-measure"], capsys)
    assert doc["result"]["max_z"] < 5
    doc = run_json(["random", "--n", "2", "--samples", "2000", "--increment", "3", "--p", "2"], capsys)
    assert set(doc["result"]["semantics"]) == {"fresh", "trajectory", "quenched"}


def test_random_measure_file(tmp_path, capsys):
    path = tmp_path / "mu.json"
    path.write_text(json.dumps({"n_bits": 1, "nu": [[1.0, 0.0], [0.0, 1.0]]}))
    doc = run_json(["random", "--n", "1", "--samples", "10", "--return-time", "2", "--measure", str(path)], capsys)
    # phi = identity as a point mass: T sends everything to 1, so 2 never returns
    assert doc["result"]["rows"][0]["exact"] == 0.0
    code, _, err = run(["random", "--n", "2", "--samples", "10", "--return-time", "2", "--measure", str(path)], capsys)
    assert code == 2 and "n_bits" in err


def test_random_bad_element(capsys):
    code, _, _ = run(["random", "--n", "2", "--samples", "10", "--return-time", "9"], capsys)
    assert code == 2


def test_spin_frozen_map(capsys):
    doc = run_json(["spin", "--L", "4", "--d", "1", "--alpha", "1.0"], capsys)
    assert doc["result"]["phi"][15] == 1


def test_spin_sweep(capsys):
    doc = run_json(["spin", "--L", "4", "--d", "1", "--sweep", "0:6:601"], capsys)
    alphas = {t["alpha"] for t in doc["result"]["thresholds"]}
    assert {2.0, 4.0} <= alphas


def test_spin_finite_beta(capsys):
    doc = run_json(["spin", "--L", "4", "--d", "1", "--alpha", "3", "--beta", "50"], capsys)
    res = doc["result"]
    mismatched = [i + 1 for i, (a, b) in enumerate(zip(res["row_argmax"], res["frozen_successor"])) if a != b]
    # only the tied configurations may disagree
    assert set(mismatched) <= {4, 7, 10, 13}


def test_spin_strict_tie_exit(capsys):
    code, _, err = run(["spin", "--L", "4", "--alpha", "3", "--strict"], capsys)
    assert code == 2 and "zero truncation sign" in err


def test_spin_tie_warning_on_stderr(capsys):
    code, _, err = run(["spin", "--L", "4", "--alpha", "3"], capsys)
    assert code == 0 and "warning" in err


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spin", "--L", "4", "--alpha", "1", "--bogus"])
    assert exc.value.code == 2


def test_help_documents_every_flag():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        for action in p._actions:
            if action.option_strings and action.dest != "help":
                assert action.help, (name, action.option_strings)


def test_jobs_env_default(monkeypatch, capsys):
    monkeypatch.setenv("TRUNCATOR_JOBS", "2")
    argv = ["random", "--n", "2", "--samples", "5000", "--kernel-hist", "--seed", "1"]
    with_env = run(argv, capsys)[1]
    monkeypatch.delenv("TRUNCATOR_JOBS")
    assert with_env == run(argv, capsys)[1]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "truncator", "spin", "--L", "3", "--alpha", "0.5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema"] == SCHEMA
