"""Per-iteration metrics, the Lyapunov potential, and verification checks.

The potential combines the average objective value with gradient-weighted
consensus penalties:

    phi = f(xbar) + (3 eta / sqrt(m)) (m0 + m1 ||grad f(xbar)||) ||X - 1 xbar||
        + (2 eta / sqrt(m)) ||V - 1 vbar||

with (m0, m1) = lyapunov_constants(l0, l1, zeta). verify_descent checks the
one-step decrease inequality implied by the theory, either per iteration on
noiseless runs or in seed-averaged form; verify_consensus_bound checks the
steady-state consensus radius rho * m * eta / (1 - rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gossip import consensus_error
from .hyperparams import lyapunov_constants
from .problems import ProblemInstance, f_global, grad_global


@dataclass(frozen=True)
class MetricsRow:
    """One recorded iteration of a run."""

    t: int
    f_mean: float
    grad_norm_mean: float
    grad_norm_agent_max: float
    cons_x: float
    cons_v: float
    phi: float
    samples_per_agent: int
    comm_rounds: int


METRICS_FIELDS = (
    "t",
    "f_mean",
    "grad_norm_mean",
    "grad_norm_agent_max",
    "cons_x",
    "cons_v",
    "phi",
    "samples_per_agent",
    "comm_rounds",
)


@dataclass
class Trajectory:
    """Everything a run records.

    rows has big_t + 1 entries (initial state plus one per iteration).
    agent_grad_norms[t, i] is ||grad f(x_i^t)|| with the global objective.
    snapshots maps iteration index to copies of (X, V) kept every
    snapshot_every iterations. output_indices holds each agent's uniform
    draw over {0, ..., big_t - 1}, or None when big_t = 0.
    """

    algorithm: str
    rows: list[MetricsRow]
    agent_grad_norms: np.ndarray
    tracker_drifts: np.ndarray
    output_indices: np.ndarray | None
    snapshots: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    box_exits: int = 0
    first_box_exit_t: int | None = None

    @property
    def big_t(self) -> int:
        return len(self.rows) - 1

    @property
    def tracker_drift_max(self) -> float:
        return float(self.tracker_drifts.max()) if self.tracker_drifts.size else 0.0


def lyapunov_phi(x: np.ndarray, v: np.ndarray, p: ProblemInstance, eta: float) -> float:
    """Potential value for iterate matrix x and tracker matrix v."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if x.shape != (p.m, p.d) or v.shape != (p.m, p.d):
        raise ValueError(f"state matrices must have shape ({p.m}, {p.d})")
    m0, m1 = lyapunov_constants(p.l0, p.l1, p.zeta)
    xbar = x.mean(axis=0)
    grad_norm = float(np.linalg.norm(grad_global(p, xbar)))
    sqm = math.sqrt(p.m)
    return (
        f_global(p, xbar)
        + (3.0 * eta / sqm) * (m0 + m1 * grad_norm) * consensus_error(x)
        + (2.0 * eta / sqm) * consensus_error(v)
    )


@dataclass(frozen=True)
class StateMetrics:
    f_mean: float
    grad_norm_mean: float
    agent_grad_norms: np.ndarray
    cons_x: float
    cons_v: float
    phi: float


def state_metrics(x: np.ndarray, v: np.ndarray, p: ProblemInstance, eta: float) -> StateMetrics:
    """Metrics of one state, shared by the runner and the tests."""
    xbar = x.mean(axis=0)
    agent_norms = np.array(
        [float(np.linalg.norm(grad_global(p, x[i]))) for i in range(p.m)]
    )
    return StateMetrics(
        f_mean=f_global(p, xbar),
        grad_norm_mean=float(np.linalg.norm(grad_global(p, xbar))),
        agent_grad_norms=agent_norms,
        cons_x=consensus_error(x),
        cons_v=consensus_error(v),
        phi=lyapunov_phi(x, v, p, eta),
    )


@dataclass(frozen=True)
class StationaritySummary:
    """Gradient-norm summary of one trajectory.

    avg_grad_mean averages ||grad f(xbar^t)|| over the output-eligible
    iterations t = 0..big_t-1 and therefore equals the expected gradient
    norm at a uniformly drawn output iterate. agent_max_at_output evaluates
    each agent's own sampled output iterate.
    """

    min_grad_mean: float
    avg_grad_mean: float
    agent_max_at_output: float


def stationarity_summary(traj: Trajectory) -> StationaritySummary:
    if traj.big_t == 0:
        row = traj.rows[0]
        return StationaritySummary(
            min_grad_mean=row.grad_norm_mean,
            avg_grad_mean=row.grad_norm_mean,
            agent_max_at_output=float(traj.agent_grad_norms[0].max()),
        )
    eligible = [row.grad_norm_mean for row in traj.rows[: traj.big_t]]
    if traj.output_indices is None:
        agent_max = float(traj.agent_grad_norms[0].max())
    else:
        per_agent = [
            float(traj.agent_grad_norms[t_i, i])
            for i, t_i in enumerate(traj.output_indices)
        ]
        agent_max = max(per_agent)
    return StationaritySummary(
        min_grad_mean=min(eligible),
        avg_grad_mean=float(np.mean(eligible)),
        agent_max_at_output=agent_max,
    )


@dataclass(frozen=True)
class ConsensusBoundReport:
    """Steady-state consensus radius check for normalized-step runs."""

    passed: bool
    bound: float
    worst_cons: float
    worst_t: int
    checked: int


def verify_consensus_bound(traj: Trajectory, rho: float, m: int, eta: float) -> ConsensusBoundReport:
    """Check cons_x <= rho * m * eta / (1 - rho) for every t >= 1.

    Requires rho < 1; the bound follows from the gossip contraction plus the
    fact that normalized steps move each row by at most eta.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"the consensus bound needs rho in [0, 1), got {rho}")
    bound = rho * m * eta / (1.0 - rho)
    worst_cons = -math.inf
    worst_t = 0
    checked = 0
    for row in traj.rows[1:]:
        checked += 1
        if row.cons_x > worst_cons:
            worst_cons = row.cons_x
            worst_t = row.t
    if checked == 0:
        return ConsensusBoundReport(True, bound, 0.0, 0, 0)
    return ConsensusBoundReport(worst_cons <= bound, bound, worst_cons, worst_t, checked)


@dataclass(frozen=True)
class DescentReport:
    passed: bool
    mode: str
    bound: float
    observed: float
    worst_t: int
    worst_traj: int
    n_seeds: int


def verify_descent(
    trajs: Sequence[Trajectory],
    p: ProblemInstance,
    eta: float,
    l_f: float,
    mode: str = "deterministic",
    tol: float = 1e-9,
) -> DescentReport:
    """Check the one-step decrease property of the potential.

    deterministic mode (noiseless runs): for every consecutive pair of rows,

        phi[t+1] <= phi[t] - (5 eta / 8) ||grad f(xbar^t)|| + (3/4) eta^2 l_f + tol.

    observed reports the worst violation margin (positive means a violation
    larger than tol).

    stochastic mode: the seed average of the time-averaged gradient norm over
    t = 0..T-1 must not exceed 8 delta_phi / (5 eta T) + (6/5) eta l_f, where
    delta_phi is the seed-averaged initial potential minus the objective
    infimum. Meant for >= 10 seeds; valid when the run's contraction factor
    passes rho_guard.
    """
    if not trajs:
        raise ValueError("at least one trajectory required")
    if mode == "deterministic":
        worst = -math.inf
        worst_t = 0
        worst_traj = 0
        for idx, traj in enumerate(trajs):
            for row, nxt in zip(traj.rows, traj.rows[1:]):
                allowed = row.phi - (5.0 * eta / 8.0) * row.grad_norm_mean
                allowed += 0.75 * eta * eta * l_f
                margin = nxt.phi - allowed
                if margin > worst:
                    worst = margin
                    worst_t = row.t
                    worst_traj = idx
        if worst == -math.inf:
            worst = 0.0
        return DescentReport(
            passed=worst <= tol, mode=mode, bound=tol, observed=worst,
            worst_t=worst_t, worst_traj=worst_traj, n_seeds=len(trajs),
        )
    if mode == "stochastic":
        big_t = trajs[0].big_t
        if big_t < 1:
            raise ValueError("stochastic descent check needs big_t >= 1")
        if any(traj.big_t != big_t for traj in trajs):
            raise ValueError("all trajectories must share the same length")
        delta_phi = float(np.mean([traj.rows[0].phi for traj in trajs])) - p.f_star
        bound = 8.0 * delta_phi / (5.0 * eta * big_t) + 1.2 * eta * l_f
        observed = float(
            np.mean(
                [np.mean([row.grad_norm_mean for row in traj.rows[:big_t]]) for traj in trajs]
            )
        )
        return DescentReport(
            passed=observed <= bound, mode=mode, bound=bound, observed=observed,
            worst_t=-1, worst_traj=-1, n_seeds=len(trajs),
        )
    raise ValueError(f"mode must be 'deterministic' or 'stochastic', got {mode!r}")
