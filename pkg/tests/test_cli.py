import csv
import io
import json
import subprocess
import sys

import pytest

from starflow.cli import CSV_COLUMNS, ConfigError, ScenarioConfig, main, parse_state, parse_times


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_star_commutator(capsys):
    code, out, _ = run(capsys, "star", "--f", "qS", "--g", "pS", "--commutator",
                       "--backend", "exact")
    assert code == 0
    assert out.strip() == "(1*i)*hbar"


def test_evolve_csv_columns(capsys):
    code, out, _ = run(capsys, "evolve", "--observable", "qS", "--kappa", "1.5", "--t", "0,0.5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert {r[0] for r in rows[1:]} == {"0.0", "0.5"}


def test_open_evolve_kms_json(capsys):
    code, out, _ = run(capsys, "open-evolve", "--observable", "qS", "--kappa", "1.5",
                       "--beta", "1", "--state", "kms", "--t", "0.3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data


def test_negative_beta_is_usage_error(capsys):
    code, _, err = run(capsys, "kms", "--beta", "-1")
    assert code == 2
    assert "beta" in err and "positive" in err


def test_missing_beta_for_kms_state(capsys):
    code, _, err = run(capsys, "open-evolve", "--state", "kms", "--observable", "qS")
    assert code == 2 and "beta" in err


def test_parse_error_is_usage_error(capsys):
    code, _, err = run(capsys, "star", "--f", "qS +", "--g", "pS")
    assert code == 2 and "position" in err


def test_unknown_subcommand(capsys):
    assert main(["nonsense"]) == 2


def test_kms_reports_flag(capsys):
    code, out, _ = run(capsys, "kms", "--beta", "1")
    assert code == 0
    assert "FLAG kms-factor-3" in out


def test_check_positivity_delta_fails(capsys):
    code, out, _ = run(capsys, "check", "positivity", "--state", "delta", "--trials", "200",
                       "--backend", "exact")
    assert code == 1 and "FAIL" in out


def test_check_positivity_kms_passes(capsys):
    code, out, _ = run(capsys, "check", "positivity", "--state", "kms", "--beta", "1",
                       "--trials", "20", "--order", "4")
    assert code == 0 and "PASS" in out


def test_classical_rotation(capsys):
    code, out, _ = run(capsys, "classical", "--field", "rotation-const", "--t", "0,1")
    assert code == 0
    assert out.splitlines()[0].startswith("t,xS0")


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = ScenarioConfig.from_dict({"params": {"kappa": 1.5, "beta": 1.0}, "observable": "pS",
                                    "times": [0.2], "state": {"variant": "kms"}})
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg.to_dict()))
    code, out, _ = run(capsys, "open-evolve", "--config", str(path), "--t", "0.4")
    assert code == 0
    assert all(line.startswith("0.4") for line in out.splitlines()[1:])


def test_config_round_trip():
    cfg = ScenarioConfig.from_dict({"params": {"m": 2.0, "kappa": 0.5}, "seed": 7})
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_config_rejects_unknown_field():
    with pytest.raises(ConfigError) as err:
        ScenarioConfig.from_dict({"colour": "red"})
    assert err.value.path == "colour"


def test_config_validation_paths():
    with pytest.raises(ConfigError, match="params.m"):
        ScenarioConfig.from_dict({"params": {"m": 0}}).validate()
    with pytest.raises(ConfigError, match="times"):
        ScenarioConfig.from_dict({"times": []}).validate()


def test_parse_times_and_state():
    assert parse_times("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_times("0.1,0.2") == [0.1, 0.2]
    assert parse_state("deformed-delta:0.5,-1") == {"variant": "deformed-delta", "q0": 0.5,
                                                     "p0": -1.0}


def test_selftest_is_deterministic(capsys):
    code1, out1, _ = run(capsys, "selftest", "--seed", "42", "--trials", "10")
    code2, out2, _ = run(capsys, "selftest", "--seed", "42", "--trials", "10")
    assert code1 == 0 and out1 == out2
    assert "discrepancy flags: 4" in out1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "starflow.cli", "star", "--f", "qB", "--g",
                           "pB", "--commutator"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hbar" in proc.stdout
