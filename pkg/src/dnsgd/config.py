"""JSON experiment configs and their validation.

A run config names a problem family, a topology, an algorithm, and either
explicit hyperparameters or an ``auto`` block with a target accuracy from
which the theory-driven calculator fills them in. A sweep config is a run
config minus a fixed network size plus ``m_list`` and ``target_epsilon``.

Errors raise ConfigError with the dotted path of the offending field so a
typo in a nested block is reported as e.g. ``problem.sigma`` rather than a
bare KeyError.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hyperparams import HyperParams
from .problems import (
    FAMILIES,
    ProblemInstance,
    make_exp_pair,
    make_poly_even,
    make_quadratic,
)
from .topology import KINDS, Graph, MixingMatrix, build_topology, metropolis_mixing

ALGORITHM_NAMES = ("dnsgd", "dsgd", "dsgt", "dnasa")
K_MODES = ("formula", "guard")


class ConfigError(ValueError):
    """Invalid or missing configuration value; .field holds the dotted path."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass(frozen=True)
class ProblemConfig:
    family: str
    d: int
    m: int
    zeta: float
    sigma: float
    seed: int = 0
    box_radius: float = 5.0
    # family-specific knobs; unused ones stay None
    rate: float | None = None
    power: int | None = None
    scale: float | None = None
    curvature: float | None = None


@dataclass(frozen=True)
class TopologyConfig:
    kind: str
    p: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class AutoHyperConfig:
    epsilon: float
    delta_f: float | None = None  # None: estimate as f(x0) - f_star
    c_k: float = 2.0
    c_k_hat: float = 1.0
    t_cap: int | None = None
    k_mode: str = "formula"
    rho_max: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    topology: TopologyConfig
    algorithm: str
    x0: float | tuple[float, ...]
    master_seed: int
    hyperparams: HyperParams | None = None
    auto: AutoHyperConfig | None = None
    num_seeds: int = 1
    snapshot_every: int = 10
    out_dir: str = "out"
    dnasa_literal_schedule: bool = False


@dataclass(frozen=True)
class SweepConfig:
    problem: ProblemConfig  # problem.m is overridden per sweep point
    topology: TopologyConfig
    x0: float | tuple[float, ...]
    master_seed: int
    auto: AutoHyperConfig
    m_list: tuple[int, ...] = field(default=(2, 4, 8, 16))
    target_epsilon: float = 0.3
    algorithm: str = "dnsgd"
    num_seeds: int = 1
    out_dir: str = "out"
    snapshot_every: int = 0


def _expect_dict(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(d: dict, allowed: set[str], path: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return d[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _as_float(value, path: str, minimum: float | None = None, strict: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if minimum is not None:
        if strict and value <= minimum:
            raise ConfigError(path, f"must be > {minimum}, got {value}")
        if not strict and value < minimum:
            raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _as_str(value, path: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(path, f"must be one of {', '.join(choices)}; got {value!r}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true/false, got {value!r}")
    return value


_PROBLEM_KEYS = {
    "family", "d", "m", "zeta", "sigma", "seed", "box_radius",
    "rate", "power", "scale", "curvature",
}


def parse_problem(d: dict, path: str = "problem") -> ProblemConfig:
    d = _expect_dict(d, path)
    _reject_unknown(d, _PROBLEM_KEYS, path)
    family = _as_str(_get(d, "family", path), f"{path}.family", choices=FAMILIES)
    cfg = ProblemConfig(
        family=family,
        d=_as_int(_get(d, "d", path), f"{path}.d", minimum=1),
        m=_as_int(_get(d, "m", path), f"{path}.m", minimum=1),
        zeta=_as_float(_get(d, "zeta", path), f"{path}.zeta", minimum=0.0),
        sigma=_as_float(_get(d, "sigma", path), f"{path}.sigma", minimum=0.0),
        seed=_as_int(_get(d, "seed", path, required=False, default=0), f"{path}.seed", minimum=0),
        box_radius=_as_float(
            _get(d, "box_radius", path, required=False, default=5.0),
            f"{path}.box_radius", minimum=0.0, strict=True,
        ),
        rate=None if "rate" not in d else _as_float(d["rate"], f"{path}.rate", 0.0, strict=True),
        power=None if "power" not in d else _as_int(d["power"], f"{path}.power", minimum=4),
        scale=None if "scale" not in d else _as_float(d["scale"], f"{path}.scale", 0.0, strict=True),
        curvature=None if "curvature" not in d
        else _as_float(d["curvature"], f"{path}.curvature", 0.0, strict=True),
    )
    needed = {"exp_pair": ("rate",), "poly_even": ("power", "scale"), "quadratic": ("curvature",)}
    for name in needed[family]:
        if getattr(cfg, name) is None:
            raise ConfigError(f"{path}.{name}", f"required for family {family!r}")
    return cfg


def parse_topology(d: dict, path: str = "topology") -> TopologyConfig:
    d = _expect_dict(d, path)
    _reject_unknown(d, {"kind", "p", "seed"}, path)
    kind = _as_str(_get(d, "kind", path), f"{path}.kind", choices=KINDS)
    p = d.get("p")
    if p is not None:
        p = _as_float(p, f"{path}.p", minimum=0.0, strict=True)
        if p > 1.0:
            raise ConfigError(f"{path}.p", f"must be in (0, 1], got {p}")
    if kind == "erdos_renyi" and p is None:
        raise ConfigError(f"{path}.p", "required for erdos_renyi")
    if kind != "erdos_renyi" and p is not None:
        raise ConfigError(f"{path}.p", f"only valid for erdos_renyi, not {kind!r}")
    seed = _as_int(_get(d, "seed", path, required=False, default=0), f"{path}.seed", minimum=0)
    return TopologyConfig(kind=kind, p=p, seed=seed)


def parse_auto(d: dict, path: str = "auto") -> AutoHyperConfig:
    d = _expect_dict(d, path)
    _reject_unknown(d, {"epsilon", "delta_f", "c_k", "c_k_hat", "t_cap", "k_mode", "rho_max"}, path)
    t_cap = d.get("t_cap")
    if t_cap is not None:
        t_cap = _as_int(t_cap, f"{path}.t_cap", minimum=1)
    delta_f = d.get("delta_f")
    if delta_f is not None:
        delta_f = _as_float(delta_f, f"{path}.delta_f", minimum=0.0)
    return AutoHyperConfig(
        epsilon=_as_float(_get(d, "epsilon", path), f"{path}.epsilon", 0.0, strict=True),
        delta_f=delta_f,
        c_k=_as_float(_get(d, "c_k", path, required=False, default=2.0), f"{path}.c_k", 0.0, strict=True),
        c_k_hat=_as_float(
            _get(d, "c_k_hat", path, required=False, default=1.0), f"{path}.c_k_hat", 0.0, strict=True
        ),
        t_cap=t_cap,
        k_mode=_as_str(
            _get(d, "k_mode", path, required=False, default="formula"), f"{path}.k_mode", choices=K_MODES
        ),
        rho_max=_as_float(
            _get(d, "rho_max", path, required=False, default=0.5), f"{path}.rho_max", 0.0, strict=True
        ),
    )


def parse_hyperparams(d: dict, path: str = "hyperparams") -> HyperParams:
    d = _expect_dict(d, path)
    _reject_unknown(d, {"eta", "b", "big_t", "k_inner", "k_init", "epsilon"}, path)
    try:
        return HyperParams(
            eta=_as_float(_get(d, "eta", path), f"{path}.eta", 0.0, strict=True),
            b=_as_int(_get(d, "b", path), f"{path}.b", minimum=1),
            big_t=_as_int(_get(d, "big_t", path), f"{path}.big_t", minimum=0),
            k_inner=_as_int(_get(d, "k_inner", path), f"{path}.k_inner", minimum=1),
            k_init=_as_int(_get(d, "k_init", path), f"{path}.k_init", minimum=1),
            epsilon=_as_float(_get(d, "epsilon", path), f"{path}.epsilon", 0.0, strict=True),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from e


def _parse_x0(value, path: str = "x0") -> float | tuple[float, ...]:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or list of numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, list):
        return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(value))
    raise ConfigError(path, f"expected a number or list of numbers, got {type(value).__name__}")


_RUN_KEYS = {
    "problem", "topology", "algorithm", "x0", "master_seed", "hyperparams",
    "auto", "num_seeds", "snapshot_every", "out_dir", "dnasa_literal_schedule",
}


def parse_run_config(d: dict) -> RunConfig:
    d = _expect_dict(d, "config")
    _reject_unknown(d, _RUN_KEYS, "")
    hp = None if "hyperparams" not in d else parse_hyperparams(d["hyperparams"])
    auto = None if "auto" not in d else parse_auto(d["auto"])
    if hp is None and auto is None:
        raise ConfigError("hyperparams", "either hyperparams or auto must be given")
    if hp is not None and auto is not None:
        raise ConfigError("hyperparams", "hyperparams and auto are mutually exclusive")
    return RunConfig(
        problem=parse_problem(_get(d, "problem", "")),
        topology=parse_topology(_get(d, "topology", "")),
        algorithm=_as_str(_get(d, "algorithm", ""), "algorithm", choices=ALGORITHM_NAMES),
        x0=_parse_x0(_get(d, "x0", "")),
        master_seed=_as_int(_get(d, "master_seed", ""), "master_seed", minimum=0),
        hyperparams=hp,
        auto=auto,
        num_seeds=_as_int(_get(d, "num_seeds", "", required=False, default=1), "num_seeds", minimum=1),
        snapshot_every=_as_int(
            _get(d, "snapshot_every", "", required=False, default=10), "snapshot_every", minimum=0
        ),
        out_dir=_as_str(_get(d, "out_dir", "", required=False, default="out"), "out_dir"),
        dnasa_literal_schedule=_as_bool(
            _get(d, "dnasa_literal_schedule", "", required=False, default=False),
            "dnasa_literal_schedule",
        ),
    )


_SWEEP_KEYS = {
    "problem", "topology", "x0", "master_seed", "auto", "m_list",
    "target_epsilon", "algorithm", "num_seeds", "out_dir", "snapshot_every",
}


def parse_sweep_config(d: dict) -> SweepConfig:
    d = _expect_dict(d, "config")
    _reject_unknown(d, _SWEEP_KEYS, "")
    raw_m = _get(d, "m_list", "", required=False, default=[2, 4, 8, 16])
    if not isinstance(raw_m, list) or not raw_m:
        raise ConfigError("m_list", "expected a non-empty list of integers")
    m_list = tuple(_as_int(v, f"m_list[{i}]", minimum=1) for i, v in enumerate(raw_m))
    return SweepConfig(
        problem=parse_problem(_get(d, "problem", "")),
        topology=parse_topology(_get(d, "topology", "")),
        x0=_parse_x0(_get(d, "x0", "")),
        master_seed=_as_int(_get(d, "master_seed", ""), "master_seed", minimum=0),
        auto=parse_auto(_get(d, "auto", "")),
        m_list=m_list,
        target_epsilon=_as_float(
            _get(d, "target_epsilon", "", required=False, default=0.3),
            "target_epsilon", 0.0, strict=True,
        ),
        algorithm=_as_str(
            _get(d, "algorithm", "", required=False, default="dnsgd"),
            "algorithm", choices=ALGORITHM_NAMES,
        ),
        num_seeds=_as_int(_get(d, "num_seeds", "", required=False, default=1), "num_seeds", minimum=1),
        out_dir=_as_str(_get(d, "out_dir", "", required=False, default="out"), "out_dir"),
        snapshot_every=_as_int(
            _get(d, "snapshot_every", "", required=False, default=0), "snapshot_every", minimum=0
        ),
    )


def load_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON in {path}: {e}") from e


def load_run_config(path: str | Path) -> RunConfig:
    return parse_run_config(load_json(path))


def load_sweep_config(path: str | Path) -> SweepConfig:
    return parse_sweep_config(load_json(path))


def build_problem(cfg: ProblemConfig, m: int | None = None) -> ProblemInstance:
    """Instantiate the configured problem, optionally overriding the agent count."""
    m = cfg.m if m is None else m
    if cfg.family == "exp_pair":
        return make_exp_pair(
            d=cfg.d, rate=cfg.rate, m=m, zeta=cfg.zeta, sigma=cfg.sigma,
            seed=cfg.seed, box_radius=cfg.box_radius,
        )
    if cfg.family == "poly_even":
        return make_poly_even(
            d=cfg.d, power=cfg.power, scale=cfg.scale, m=m, zeta=cfg.zeta,
            sigma=cfg.sigma, seed=cfg.seed, box_radius=cfg.box_radius,
        )
    return make_quadratic(
        d=cfg.d, curvature=cfg.curvature, m=m, zeta=cfg.zeta, sigma=cfg.sigma,
        seed=cfg.seed, box_radius=cfg.box_radius,
    )


def build_mixing(cfg: TopologyConfig, m: int) -> tuple[Graph, MixingMatrix]:
    graph = build_topology(cfg.kind, m, p=cfg.p, seed=cfg.seed)
    return graph, metropolis_mixing(graph)


def resolve_x0(x0: float | tuple[float, ...], d: int) -> np.ndarray:
    if isinstance(x0, tuple):
        if len(x0) != d:
            raise ConfigError("x0", f"list length {len(x0)} does not match problem d={d}")
        return np.asarray(x0, dtype=np.float64)
    return np.full(d, float(x0))
