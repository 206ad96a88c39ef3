"""Experiment harness: config parsing, file outputs, reproducibility."""

import json

import numpy as np
import pytest

from dnsgd.config import (
    AutoHyperConfig,
    ConfigError,
    ProblemConfig,
    RunConfig,
    SweepConfig,
    TopologyConfig,
    parse_run_config,
    resolve_x0,
)
from dnsgd.harness import (
    CSV_HEADER,
    resolve_hyperparams,
    run_experiment,
    sweep_speedup,
)
from dnsgd.hyperparams import HyperParams
from dnsgd.problems import f_global
from dnsgd.topology import build_topology, metropolis_mixing


def _quad_cfg(**kw):
    base = dict(
        problem=ProblemConfig(
            family="quadratic", d=3, m=4, zeta=0.5, sigma=0.0, seed=2, curvature=1.0
        ),
        topology=TopologyConfig(kind="ring"),
        algorithm="dnsgd",
        x0=0.6,
        master_seed=11,
        hyperparams=HyperParams(eta=0.03, b=1, big_t=40, k_inner=11, k_init=2, epsilon=0.12),
        num_seeds=2,
        snapshot_every=0,
        out_dir="out",
    )
    base.update(kw)
    return RunConfig(**base)


def _raw_run_dict():
    return {
        "problem": {
            "family": "quadratic", "d": 3, "m": 4, "zeta": 0.5, "sigma": 0.0,
            "seed": 2, "curvature": 1.0,
        },
        "topology": {"kind": "ring"},
        "algorithm": "dnsgd",
        "x0": 0.6,
        "master_seed": 11,
        "auto": {"epsilon": 0.12},
    }


def test_csv_header_golden():
    assert CSV_HEADER == (
        "run_id,seed_index,t,f_mean,grad_norm_mean,grad_norm_agent_max,"
        "cons_x,cons_v,phi,samples_per_agent,comm_rounds"
    )


def test_run_outputs_layout(tmp_path):
    cfg = _quad_cfg()
    result = run_experiment(cfg, out_dir=tmp_path)
    assert (tmp_path / "metrics_seed000.csv").exists()
    assert (tmp_path / "metrics_seed001.csv").exists()
    assert (tmp_path / "checks.csv").exists()
    assert (tmp_path / "config_echo.json").exists()
    assert (tmp_path / "summary.txt").exists()
    text = (tmp_path / "metrics_seed000.csv").read_text()
    assert text.startswith(CSV_HEADER + "\n")
    # header plus big_t + 1 recorded states
    assert len(text.strip().splitlines()) == 1 + 41
    first = text.splitlines()[1].split(",")
    assert first[0] == "dnsgd-quadratic-m4-s11"
    assert first[1] == "0" and first[2] == "0"
    assert result.all_checks_passed
    names = {c.name for c in result.checks}
    assert "tracker_identity" in names
    assert "consensus_bound" in names


def test_rerun_is_byte_identical(tmp_path):
    cfg = _quad_cfg()
    run_experiment(cfg, out_dir=tmp_path / "a")
    run_experiment(cfg, out_dir=tmp_path / "b")
    for name in ("metrics_seed000.csv", "metrics_seed001.csv", "checks.csv",
                 "config_echo.json", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_thread_count_does_not_change_bytes(tmp_path):
    cfg = _quad_cfg(
        problem=ProblemConfig(
            family="exp_pair", d=4, m=4, zeta=0.2, sigma=0.4, seed=3, rate=1.0
        ),
        num_seeds=4,
    )
    run_experiment(cfg, threads=1, out_dir=tmp_path / "t1")
    run_experiment(cfg, threads=4, out_dir=tmp_path / "t4")
    for idx in range(4):
        name = f"metrics_seed{idx:03d}.csv"
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()


def test_degenerate_horizon_csv(tmp_path):
    cfg = _quad_cfg(
        hyperparams=HyperParams(eta=0.03, b=1, big_t=0, k_inner=1, k_init=1, epsilon=0.1),
        num_seeds=1,
    )
    run_experiment(cfg, out_dir=tmp_path)
    lines = (tmp_path / "metrics_seed000.csv").read_text().strip().splitlines()
    assert len(lines) == 2


def test_config_echo_resolved_block(tmp_path):
    cfg = _quad_cfg(hyperparams=None, auto=AutoHyperConfig(epsilon=0.12, k_mode="guard"))
    result = run_experiment(cfg, out_dir=tmp_path)
    echo = json.loads((tmp_path / "config_echo.json").read_text())
    resolved = echo["resolved"]
    assert resolved["eta"] == result.hp.eta
    assert resolved["b"] == result.hp.b
    assert resolved["k_inner"] == result.hp.k_inner
    assert echo["config"]["algorithm"] == "dnsgd"
    assert len(resolved["seeds"]) == cfg.num_seeds


def test_auto_delta_f_defaults_to_initial_gap():
    cfg = _quad_cfg(hyperparams=None, auto=AutoHyperConfig(epsilon=0.12))
    from dnsgd.config import build_mixing, build_problem

    p = build_problem(cfg.problem)
    _, mixing = build_mixing(cfg.topology, p.m)
    x0 = resolve_x0(cfg.x0, p.d)
    _, theory = resolve_hyperparams(cfg, p, mixing, x0)
    assert theory is not None
    assert theory.delta_phi == pytest.approx(
        2.0 * (f_global(p, x0) - p.f_star), rel=1e-12
    )


def test_explicit_hyperparams_pass_through():
    cfg = _quad_cfg()
    mixing = metropolis_mixing(build_topology("ring", 4))
    from dnsgd.config import build_problem

    p = build_problem(cfg.problem)
    hp, theory = resolve_hyperparams(cfg, p, mixing, np.zeros(3))
    assert hp is cfg.hyperparams
    assert theory is None


def test_parse_run_config_roundtrip():
    cfg = parse_run_config(_raw_run_dict())
    assert cfg.problem.family == "quadratic"
    assert cfg.auto.epsilon == 0.12
    assert cfg.hyperparams is None
    assert cfg.num_seeds == 1


def test_parse_errors_carry_field_paths():
    raw = _raw_run_dict()
    del raw["problem"]["d"]
    with pytest.raises(ConfigError) as exc:
        parse_run_config(raw)
    assert exc.value.field == "problem.d"

    raw = _raw_run_dict()
    raw["problem"]["unknown_knob"] = 1
    with pytest.raises(ConfigError, match="unknown field"):
        parse_run_config(raw)

    raw = _raw_run_dict()
    del raw["auto"]
    with pytest.raises(ConfigError, match="either hyperparams or auto"):
        parse_run_config(raw)

    raw = _raw_run_dict()
    raw["hyperparams"] = {
        "eta": 0.1, "b": 1, "big_t": 5, "k_inner": 1, "k_init": 1, "epsilon": 0.1
    }
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_run_config(raw)

    raw = _raw_run_dict()
    raw["topology"] = {"kind": "erdos_renyi"}
    with pytest.raises(ConfigError) as exc:
        parse_run_config(raw)
    assert exc.value.field == "topology.p"

    raw = _raw_run_dict()
    raw["problem"]["d"] = True
    with pytest.raises(ConfigError):
        parse_run_config(raw)


def test_resolve_x0_length_mismatch():
    assert resolve_x0(0.5, 3).tolist() == [0.5, 0.5, 0.5]
    assert resolve_x0((1.0, 2.0), 2).tolist() == [1.0, 2.0]
    with pytest.raises(ConfigError, match="x0"):
        resolve_x0((1.0, 2.0), 3)


def test_box_exits_reported(tmp_path):
    cfg = _quad_cfg(
        problem=ProblemConfig(
            family="quadratic", d=3, m=4, zeta=0.0, sigma=0.0, seed=2,
            curvature=1.0, box_radius=0.5,
        ),
        hyperparams=HyperParams(eta=0.3, b=1, big_t=3, k_inner=3, k_init=1, epsilon=0.1),
        num_seeds=1,
    )
    result = run_experiment(cfg, out_dir=tmp_path)
    assert result.box_exits_total >= 1
    assert "box exits" in (tmp_path / "summary.txt").read_text()


def test_sweep_outputs_and_determinism(tmp_path):
    cfg = SweepConfig(
        problem=ProblemConfig(
            family="quadratic", d=3, m=2, zeta=0.5, sigma=0.0, seed=2, curvature=1.0
        ),
        topology=TopologyConfig(kind="ring"),
        x0=1.0,
        master_seed=11,
        auto=AutoHyperConfig(epsilon=0.3, t_cap=200),
        m_list=(4, 4, 8),
        target_epsilon=0.3,
        num_seeds=2,
    )
    result = sweep_speedup(cfg, out_dir=tmp_path)
    text = (tmp_path / "speedup.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "m,seeds_reached,num_seeds,mean_samples_per_agent,mean_comm_rounds"
    assert len(lines) == 4
    # noiseless runs make duplicate m entries literally identical
    assert lines[1] == lines[2]
    assert result.points[0].seeds_reached == 2
    assert result.points[0].mean_samples_per_agent == result.points[1].mean_samples_per_agent


def test_sweep_unreachable_target_yields_nan_row(tmp_path):
    cfg = SweepConfig(
        problem=ProblemConfig(
            family="quadratic", d=3, m=2, zeta=0.5, sigma=0.0, seed=2, curvature=1.0
        ),
        topology=TopologyConfig(kind="ring"),
        x0=4.0,
        master_seed=11,
        auto=AutoHyperConfig(epsilon=0.3, t_cap=2),
        m_list=(4,),
        target_epsilon=1e-9,
        num_seeds=1,
    )
    result = sweep_speedup(cfg, out_dir=tmp_path)
    assert result.points[0].seeds_reached == 0
    assert np.isnan(result.points[0].mean_samples_per_agent)
    row = (tmp_path / "speedup.csv").read_text().strip().splitlines()[1]
    assert row.split(",")[3] == "nan"
