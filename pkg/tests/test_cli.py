import json

import pytest

from qibs.cli import TOY_GOLDEN, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_toy_passes(capsys):
    code, out, _ = run_cli(capsys, "toy")
    assert code == 0
    assert "FAIL" not in out and "all checkpoints match" in out


def test_toy_json(capsys):
    code, out, _ = run_cli(capsys, "toy", "--json")
    payload = json.loads(out)
    assert code == 0 and payload["passed"] and payload["first_failure"] is None
    assert [c["name"] for c in payload["checkpoints"]] == [
        "otp_example", "signature", "encrypted_request", "skg_recovery", "reply", "outcome"]


def test_toy_tampered_golden_names_stage(tmp_path, capsys):
    golden = json.loads(json.dumps(TOY_GOLDEN))
    golden["reply"] = {"scale": 1.0, "terms": {"011": 1}}
    path = tmp_path / "golden.json"
    path.write_text(json.dumps(golden))
    code, _, err = run_cli(capsys, "toy", "--golden", str(path))
    assert code == 1
    assert "reply" in err


def test_toy_global_phase_ignored(tmp_path, capsys):
    golden = json.loads(json.dumps(TOY_GOLDEN))
    golden["skg_recovery"] = {"scale": 1.0, "terms": {"010": [0, 1]}}
    path = tmp_path / "golden.json"
    path.write_text(json.dumps(golden))
    assert run_cli(capsys, "toy", "--golden", str(path))[0] == 0


def test_run_toy_accepts(capsys):
    code, out, _ = run_cli(capsys, "run", "--toy")
    assert code == 0 and "outcome: accept" in out


def test_run_injected_toy_parameters(capsys):
    code, out, _ = run_cli(capsys, "run", "--m", "3", "--identity", "011", "--message", "010",
                           "--inject-ti", "010110", "--inject-tu", "100101", "--inject-phi", "128/8", "--json")
    payload = json.loads(out)
    assert code == 0 and payload["outcome"] == "accept"


def test_run_forged_key_rejects_with_expected_exit(capsys):
    code, out, _ = run_cli(capsys, "run", "--toy", "--forge-key", "101001")
    assert code == 0 and "outcome: reject" in out


def test_run_bad_key_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "run", "--m", "3", "--inject-ti", "0101")
    assert code == 2 and err


def test_run_bad_phase_is_usage_error(capsys):
    assert run_cli(capsys, "run", "--inject-phi", "pi")[0] == 2


def test_run_json_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli(capsys, "run", "--seed", "13", "--m", "4", "--out", str(a))[0] == 0
    assert run_cli(capsys, "run", "--seed", "13", "--m", "4", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("QIBS_SEED", "17")
    _, out, _ = run_cli(capsys, "run", "--json")
    assert json.loads(out)["seed"] == 17
    monkeypatch.setenv("QIBS_SEED", "x")
    assert run_cli(capsys, "run")[0] == 2


def test_attack_forgery(capsys):
    code, out, _ = run_cli(capsys, "attack", "forgery", "--trials", "20", "--json")
    payload = json.loads(out)
    assert code == 0 and payload["rejection_rate"] == 1.0


def test_attack_trivial_pauli_accepted(capsys):
    code, out, _ = run_cli(capsys, "attack", "pauli", "--pauli", "III", "--trials", "10", "--json")
    assert code == 0 and json.loads(out)["rejected"] == 0


def test_attack_zero_trials_is_usage_error(capsys):
    assert run_cli(capsys, "attack", "forgery", "--trials", "0")[0] == 2


def test_experiment_csv(capsys):
    code, out, err = run_cli(capsys, "experiment", "--trials", "50", "--grid", "0,0.1")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 3
    assert lines[1].split(",")[4] == "1.000000"
    assert "first p" in err


def test_experiment_json_deterministic(capsys):
    a = run_cli(capsys, "experiment", "--trials", "40", "--grid", "0.05", "--json", "--seed", "2")[1]
    b = run_cli(capsys, "experiment", "--trials", "40", "--grid", "0.05", "--json", "--seed", "2")[1]
    assert a == b


@pytest.mark.parametrize("grid", ["", ","])
def test_experiment_empty_grid(capsys, grid):
    assert run_cli(capsys, "experiment", "--grid", grid)[0] == 2


def test_email_demo(capsys):
    code, out, _ = run_cli(capsys, "email-demo", "Meet at noon.")
    assert code == 0 and "verification: accept" in out
    code, out, _ = run_cli(capsys, "email-demo", "Meet at noon.", "--tamper")
    assert code == 0 and "verification: reject" in out


def test_email_demo_empty_message(capsys):
    assert run_cli(capsys, "email-demo", "")[0] == 2


def test_costs(capsys):
    code, out, _ = run_cli(capsys, "costs", "--m", "3", "--n", "8", "--json")
    payload = json.loads(out)
    assert code == 0 and payload["passed"]


def test_missing_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
