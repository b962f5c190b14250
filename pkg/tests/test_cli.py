import json
from pathlib import Path

import pytest

from lhmip.cli import main

ROOT = Path(__file__).resolve().parents[1]
HZ = str(ROOT / "hamiltonians" / "z1.json")
HXX = str(ROOT / "hamiltonians" / "xxzz.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_exact(capsys):
    code, out, _ = run(capsys, "simulate", "--hamiltonian", HZ, "--p", "0")
    assert code == 0
    rep = json.loads(out)
    assert rep["mode"] == "exact"
    assert rep["per_test"]["Anticommutation"]["value"] == pytest.approx(0.9633883476483185, abs=1e-12)
    assert "completeness" in rep


def test_simulate_exact_is_byte_stable(capsys, tmp_path):
    outs = []
    for threads in ("1", "2"):
        path = tmp_path / f"r{threads}.json"
        assert main(["simulate", "--hamiltonian", HZ, "--threads", threads, "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_mc_and_transcript(capsys, tmp_path):
    tr = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "simulate", "--hamiltonian", HZ, "--mode", "mc", "--samples", "200",
                       "--seed", "7", "--transcript", str(tr))
    assert code == 0
    rep = json.loads(out)
    assert rep["seed"] == 7 and rep["samples"] == 200
    assert len(tr.read_text().splitlines()) == 200


def test_simulate_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"hamiltonian": HZ, "p": 1.0, "strategy": "corrupted",
                               "strategy_params": {"kinds": [["sign_flip", 1, "X"]]}}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg))
    assert code == 0
    rep = json.loads(out)
    assert rep["p"] == 1.0 and "sign_flip" in rep["strategy"]


def test_simulate_delta(capsys):
    code, out, _ = run(capsys, "simulate", "--hamiltonian", HZ, "--delta", "0.5", "--test", "Stabilizer")
    assert code == 0
    assert json.loads(out)["p"] == pytest.approx(0.5 ** (15 / 16))


def test_config_errors(capsys, tmp_path):
    assert run(capsys, "simulate", "--hamiltonian", "missing.json")[0] == 2
    assert run(capsys, "simulate")[0] == 2
    assert run(capsys, "simulate", "--hamiltonian", HZ, "--mode", "mc")[0] == 2
    assert run(capsys, "simulate", "--hamiltonian", HZ, "--p", "2")[0] == 2
    assert run(capsys, "simulate", "--hamiltonian", HZ, "--test", "Bogus")[0] == 2
    assert run(capsys, "simulate", "--hamiltonian", HZ, "--strategy-params", "{oops")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 1, "terms": [{"alpha": 2.0, "x": "0", "z": "1"}]}))
    assert run(capsys, "simulate", "--hamiltonian", str(bad))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--mode", "fast"])
    assert exc.value.code == 2


def test_budget_error(capsys, tmp_path):
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"n": 4, "terms": [{"alpha": 1.0, "x": "0000", "z": "1111"}]}))
    assert run(capsys, "simulate", "--hamiltonian", str(big))[0] == 3


def test_code_command(capsys):
    code, out, _ = run(capsys, "code")
    assert code == 0
    rep = json.loads(out)
    assert rep["group_size"] == 64 and len(rep["complementary"]) == 14


def test_code_command_invalid(capsys, tmp_path):
    bad = tmp_path / "code.json"
    bad.write_text(json.dumps({"r": 2, "generators": ["XX", "ZI"], "logical_x": "XX", "logical_z": "ZZ"}))
    code, out, _ = run(capsys, "code", "--code", str(bad))
    assert code == 4
    assert not {c["name"]: c["passed"] for c in json.loads(out)["checks"]}["generators_commute"]


def test_energy_command(capsys):
    code, out, err = run(capsys, "energy", "--hamiltonian", HZ, "--amplify", "4", "2", "--lam", "0.5")
    assert code == 0
    rep = json.loads(out)
    assert rep["lambda_min"] == pytest.approx(-1.0)
    assert rep["omega_energy"] == pytest.approx(0.75)
    amp = rep["amplification"]
    assert amp["a"] == 4 and amp["map_value"] == pytest.approx(175 / 256)
    assert "skipped" in amp["expanded"]
    code, out, err = run(capsys, "energy", "--hamiltonian", HXX, "--amplify", "2", "1")
    assert code == 0 and "warning" in err
    exp = json.loads(out)["amplification"]["expanded"]
    assert exp["lambda_min_dense"] == pytest.approx(exp["lambda_min_map"], abs=1e-9)


def test_diagnose_command(capsys):
    code, out, _ = run(capsys, "diagnose", "--hamiltonian", HZ, "--prover", "2")
    assert code == 0
    rep = json.loads(out)
    assert rep["isometry"]["entries"]["max"] <= 1e-9
    assert run(capsys, "diagnose", "--hamiltonian", HZ, "--prover", "9")[0] == 2
