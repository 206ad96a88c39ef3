"""Command line interface: exit codes, report text, reproducible outputs."""

import json
import subprocess
import sys

import pytest

from dnsgd.cli import main


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _auto_quadratic(tmp_path, **extra):
    cfg = {
        "problem": {
            "family": "quadratic", "d": 5, "m": 4, "zeta": 0.5, "sigma": 0.0,
            "seed": 3, "curvature": 1.0,
        },
        "topology": {"kind": "ring"},
        "algorithm": "dnsgd",
        "x0": 0.6,
        "master_seed": 7,
        "auto": {"epsilon": 0.12, "k_mode": "guard"},
        "snapshot_every": 0,
    }
    cfg.update(extra)
    return _write(tmp_path / "run.json", cfg)


def _noisy_run(tmp_path):
    return _write(tmp_path / "noisy.json", {
        "problem": {
            "family": "exp_pair", "d": 4, "m": 4, "zeta": 0.2, "sigma": 0.5,
            "seed": 5, "rate": 1.0,
        },
        "topology": {"kind": "ring"},
        "algorithm": "dnsgd",
        "x0": 0.8,
        "master_seed": 7,
        "hyperparams": {
            "eta": 0.02, "b": 2, "big_t": 8, "k_inner": 3, "k_init": 1,
            "epsilon": 0.1,
        },
        "snapshot_every": 0,
    })


def test_params_reports_calculator_output(tmp_path, capsys):
    code = main(["params", "--config", _auto_quadratic(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "eta = 0.024" in out
    assert "big_t = 5000 (uncapped 5000)" in out
    assert "k_inner = 29" in out
    assert "guard: PASS" in out
    assert "condition noise_floor: PASS" in out


def test_run_writes_outputs_and_succeeds(tmp_path, capsys):
    cfg = _auto_quadratic(tmp_path, auto={"epsilon": 0.12, "k_mode": "guard", "t_cap": 60})
    code = main(["run", "--config", cfg, "--out-dir", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert (tmp_path / "out" / "metrics_seed000.csv").exists()
    assert "check descent_deterministic: PASS" in out
    assert "check consensus_bound: PASS" in out


def test_run_rerun_is_byte_identical(tmp_path):
    cfg = _noisy_run(tmp_path)
    main(["run", "--config", cfg, "--out-dir", str(tmp_path / "a")])
    main(["run", "--config", cfg, "--out-dir", str(tmp_path / "b")])
    a = (tmp_path / "a" / "metrics_seed000.csv").read_bytes()
    b = (tmp_path / "b" / "metrics_seed000.csv").read_bytes()
    assert a == b


def test_run_seed_override_changes_noise(tmp_path):
    cfg = _noisy_run(tmp_path)
    main(["run", "--config", cfg, "--seed", "1", "--out-dir", str(tmp_path / "s1")])
    main(["run", "--config", cfg, "--seed", "2", "--out-dir", str(tmp_path / "s2")])
    a = (tmp_path / "s1" / "metrics_seed000.csv").read_text()
    b = (tmp_path / "s2" / "metrics_seed000.csv").read_text()
    assert a != b
    # the run id embeds the overridden master seed
    assert a.splitlines()[1].startswith("dnsgd-exp_pair-m4-s1,")


def test_check_smoothness_average_counterexample(tmp_path, capsys):
    spec = _write(tmp_path / "cex.json", {
        "mode": "counterexample", "target": "average", "rate": 1.0, "trials": 200,
    })
    code = main(["check-smoothness", "--config", spec])
    out = capsys.readouterr().out
    assert code == 1
    assert "certificate violated" in out
    assert "worst pair" in out


def test_check_smoothness_single_holds(tmp_path, capsys):
    spec = _write(tmp_path / "single.json", {
        "mode": "counterexample", "target": "single", "rate": 1.0, "trials": 200,
    })
    code = main(["check-smoothness", "--config", spec])
    assert code == 0
    assert "certificate holds" in capsys.readouterr().out


def test_validate_topology_pass(tmp_path, capsys):
    code = main([
        "validate-topology", "--kind", "ring", "--m", "8",
        "--out-dir", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "clause symmetry: PASS" in out
    assert "overall: PASS" in out
    assert (tmp_path / "topology_report.txt").exists()


def test_validate_topology_disconnected_fails(capsys):
    code = main([
        "validate-topology", "--kind", "erdos_renyi", "--m", "30", "--p", "1e-06",
    ])
    assert code == 1
    assert "validation FAIL" in capsys.readouterr().out


def test_usage_errors_exit_two(tmp_path, capsys):
    for argv in ([], ["frobnicate"], ["run"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
        capsys.readouterr()

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err

    no_auto = _noisy_run(tmp_path)
    assert main(["params", "--config", no_auto]) == 2
    assert "auto" in capsys.readouterr().err

    spec = _write(tmp_path / "mode.json", {"mode": "sideways"})
    assert main(["check-smoothness", "--config", spec]) == 2
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dnsgd.cli", "validate-topology", "--kind", "ring", "--m", "4"],
        capture_output=True, text=True, cwd=str(tmp_path),
    )
    assert proc.returncode == 0
    assert "overall: PASS" in proc.stdout
