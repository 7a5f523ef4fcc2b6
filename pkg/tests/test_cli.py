import json
from pathlib import Path

import pytest

from entquant.cli import main, verification_checks


def write_config(tmp_path, **extra):
    cfg = {
        "true_state": "bell:0.6",
        "n_qubits": 2,
        "m_values": [100],
        "trials_per_m": 1,
        "chain": {"total_steps": 200, "burn_in": 50, "thinning": 5},
        "bootstrap_resamples": 5,
        **extra,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def csvs(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == len(verification_checks())


def test_run_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", write_config(tmp_path), "--seed", "1", "--output", str(out)]) == 0
    assert main(["report", "--output", str(out)]) == 0
    assert "sufficient M" in capsys.readouterr().out


def test_run_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--seed", "7", "--output", str(tmp_path / name)]) == 0
    assert csvs(tmp_path / "a") == csvs(tmp_path / "b")


def test_single_commands_are_deterministic(tmp_path):
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["simulate", "--state", "w_noise:0.6", "--n-qubits", "2", "--m", "500", "--seed", "2", "--output", out]) == 0
        record = str(tmp_path / name / "record.csv")
        assert main(["chain", "--record", record, "--prior", "GH", "--steps", "1000", "--burn-in", "200", "--seed", "3", "--output", out]) == 0
        assert main(["mle", "--record", record, "--resamples", "5", "--seed", "4", "--output", out]) == 0
        assert main(["sample-prior", "--prior", "Z+I", "--n-qubits", "2", "--count", "50", "--seed", "5", "--output", out]) == 0
    a, b = csvs(tmp_path / "a"), csvs(tmp_path / "b")
    assert set(a) == {"record.csv", "chain_GH.csv", "bootstrap.csv", "prior_Z+I.csv"}
    assert a == b


def test_calibrate_prints_beta(capsys):
    assert main(["sample-prior", "--prior", "GH", "--n-qubits", "2", "--count", "200", "--calibrate"]) == 0
    assert 0 < json.loads(capsys.readouterr().out)["beta"]


def test_invalid_config_exit_code(tmp_path, capsys):
    code = main(["run", "--config", write_config(tmp_path, m_values=[100, 10]), "--output", str(tmp_path / "x")])
    assert code == 2
    assert "m_values" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["chain", "--record", str(tmp_path / "missing.csv")]) == 3


def test_diagnostic_exit_code(tmp_path):
    out = str(tmp_path)
    main(["simulate", "--state", "w_noise:0.6", "--n-qubits", "2", "--m", "1000000", "--output", out])
    cfg = tmp_path / "chain.json"
    cfg.write_text(json.dumps({"chain": {"total_steps": 50, "burn_in": 0, "thinning": 1, "initial_step_size": 50.0, "start": "mle"}}))
    code = main(["chain", "--record", str(tmp_path / "record.csv"), "--prior", "GH", "--config", str(cfg), "--output", out])
    assert code == 4


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
