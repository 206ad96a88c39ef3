"""Decentralized optimizer updates and the trajectory runner.

The primary method combines per-agent normalized steps with gradient
tracking and accelerated gossip:

    init:  X = 1 x0^T,  G = minibatch gradients at x0,  V = acc_gossip(G, k_init)
    step:  U = normalize_rows(V)
           X <- acc_gossip(X - eta U, k_inner)
           G' = minibatch gradients at the new local iterates
           V <- acc_gossip(V + G' - G, k_inner)

Baselines share the sampling and bookkeeping but mix with a single plain
gossip round per matrix update:

    dsgd   X <- W (X - eta G)
    dsgt   X <- W (X - eta V),            V <- W V + G' - G
    dnasa  X <- W (X - eta_t normalize_rows(V)), V <- W V + G' - G

dnasa uses the schedule eta_t = min(eta, m^(1/4) / t^(3/4)) with t >= 1 by
default; the literal growing schedule eta_t = m^(1/4) t^(3/4) is available
behind a switch. Communication counters advance by the gossip depth
parameter per accelerated call and by one round per plain W-multiplication;
sample counters advance by the batch size per agent per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import MetricsRow, Trajectory, state_metrics
from .gossip import acc_gossip, plain_gossip
from .hyperparams import HyperParams
from .problems import ProblemInstance, sample_grad
from .streams import RunStreams
from .topology import MixingMatrix

ALGORITHMS = ("dnsgd", "dsgd", "dsgt", "dnasa")

# Algorithms that maintain a gradient tracker with the mean-preservation
# identity mean(V) = mean(G).
TRACKED = ("dnsgd", "dsgt", "dnasa")


class NonFiniteStateError(RuntimeError):
    """Raised when an optimizer state stops being finite."""


@dataclass(frozen=True)
class OptimizerState:
    """Row-stacked local iterates, tracker, and last sampled gradients."""

    x: np.ndarray
    v: np.ndarray
    g_prev: np.ndarray
    t: int
    samples_per_agent: int
    comm_rounds: int


def normalize_rows(v: np.ndarray, eps_norm: float = 1e-12) -> np.ndarray:
    """Scale each row to unit Euclidean norm; rows below eps_norm become zero."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("normalize_rows requires finite input")
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    out = np.zeros_like(v)
    keep = norms[:, 0] > eps_norm
    out[keep] = v[keep] / norms[keep]
    return out


def _ensure_finite(mat: np.ndarray, what: str, t: int) -> None:
    bad = ~np.isfinite(mat)
    if bad.any():
        agent = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise NonFiniteStateError(
            f"non-finite {what} at iteration {t}, agent {agent}"
        )


def _sample_batch(
    p: ProblemInstance, x_rows: np.ndarray, b: int, streams: RunStreams, iteration: int
) -> np.ndarray:
    g = np.empty((p.m, p.d))
    for i in range(p.m):
        g[i] = sample_grad(p, i, x_rows[i], b, streams.oracle(i, iteration)).grad
    return g


def _as_start_point(p: ProblemInstance, x0: np.ndarray) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (p.d,):
        raise ValueError(f"x0 must have shape ({p.d},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    return x0


def dnsgd_init(
    p: ProblemInstance, x0: np.ndarray, hp: HyperParams, w: MixingMatrix, streams: RunStreams
) -> OptimizerState:
    """Consensus start: every agent at x0, tracker gossiped from fresh gradients."""
    x0 = _as_start_point(p, x0)
    x = np.tile(x0, (p.m, 1))
    g = _sample_batch(p, x, hp.b, streams, iteration=0)
    _ensure_finite(g, "gradient batch", 0)
    v = acc_gossip(g, w, hp.k_init)
    return OptimizerState(
        x=x, v=v, g_prev=g, t=0, samples_per_agent=hp.b, comm_rounds=hp.k_init
    )


def dnsgd_step(
    s: OptimizerState, p: ProblemInstance, hp: HyperParams, w: MixingMatrix, streams: RunStreams
) -> OptimizerState:
    t_next = s.t + 1
    u = normalize_rows(s.v)
    x_next = acc_gossip(s.x - hp.eta * u, w, hp.k_inner)
    _ensure_finite(x_next, "iterate matrix", t_next)
    g_next = _sample_batch(p, x_next, hp.b, streams, iteration=t_next)
    _ensure_finite(g_next, "gradient batch", t_next)
    v_next = acc_gossip(s.v + g_next - s.g_prev, w, hp.k_inner)
    _ensure_finite(v_next, "tracker matrix", t_next)
    return OptimizerState(
        x=x_next, v=v_next, g_prev=g_next, t=t_next,
        samples_per_agent=s.samples_per_agent + hp.b,
        comm_rounds=s.comm_rounds + 2 * hp.k_inner,
    )


def baseline_init(
    p: ProblemInstance, x0: np.ndarray, hp: HyperParams, w: MixingMatrix, streams: RunStreams
) -> OptimizerState:
    """Shared start for the plain-gossip baselines: V starts at the sampled G."""
    x0 = _as_start_point(p, x0)
    x = np.tile(x0, (p.m, 1))
    g = _sample_batch(p, x, hp.b, streams, iteration=0)
    _ensure_finite(g, "gradient batch", 0)
    return OptimizerState(
        x=x, v=g.copy(), g_prev=g, t=0, samples_per_agent=hp.b, comm_rounds=0
    )


def dsgd_step(
    s: OptimizerState, p: ProblemInstance, hp: HyperParams, w: MixingMatrix, streams: RunStreams
) -> OptimizerState:
    t_next = s.t + 1
    x_next = plain_gossip(s.x - hp.eta * s.g_prev, w, 1)
    _ensure_finite(x_next, "iterate matrix", t_next)
    g_next = _sample_batch(p, x_next, hp.b, streams, iteration=t_next)
    _ensure_finite(g_next, "gradient batch", t_next)
    return OptimizerState(
        x=x_next, v=g_next, g_prev=g_next, t=t_next,
        samples_per_agent=s.samples_per_agent + hp.b,
        comm_rounds=s.comm_rounds + 1,
    )


def _tracked_baseline_step(
    s: OptimizerState,
    p: ProblemInstance,
    hp: HyperParams,
    w: MixingMatrix,
    streams: RunStreams,
    step_size: float,
    normalized: bool,
) -> OptimizerState:
    t_next = s.t + 1
    direction = normalize_rows(s.v) if normalized else s.v
    x_next = plain_gossip(s.x - step_size * direction, w, 1)
    _ensure_finite(x_next, "iterate matrix", t_next)
    g_next = _sample_batch(p, x_next, hp.b, streams, iteration=t_next)
    _ensure_finite(g_next, "gradient batch", t_next)
    v_next = plain_gossip(s.v, w, 1) + g_next - s.g_prev
    _ensure_finite(v_next, "tracker matrix", t_next)
    return OptimizerState(
        x=x_next, v=v_next, g_prev=g_next, t=t_next,
        samples_per_agent=s.samples_per_agent + hp.b,
        comm_rounds=s.comm_rounds + 2,
    )


def dsgt_step(
    s: OptimizerState, p: ProblemInstance, hp: HyperParams, w: MixingMatrix, streams: RunStreams
) -> OptimizerState:
    return _tracked_baseline_step(s, p, hp, w, streams, hp.eta, normalized=False)


def dnasa_schedule(eta_max: float, m: int, t: int, literal: bool = False) -> float:
    """Step size at iteration t >= 1 for the normalized tracking baseline."""
    if t < 1:
        raise ValueError("schedule index starts at 1")
    if literal:
        return m**0.25 * t**0.75
    return min(eta_max, m**0.25 / t**0.75)


def dnasa_step(
    s: OptimizerState,
    p: ProblemInstance,
    hp: HyperParams,
    w: MixingMatrix,
    streams: RunStreams,
    literal_schedule: bool = False,
) -> OptimizerState:
    step = dnasa_schedule(hp.eta, p.m, s.t + 1, literal=literal_schedule)
    return _tracked_baseline_step(s, p, hp, w, streams, step, normalized=True)


def _tracker_drift(s: OptimizerState) -> float:
    vbar = s.v.mean(axis=0)
    gbar = s.g_prev.mean(axis=0)
    scale = max(1.0, float(np.linalg.norm(gbar)))
    return float(np.linalg.norm(vbar - gbar)) / scale


def run(
    algorithm: str,
    p: ProblemInstance,
    hp: HyperParams,
    w: MixingMatrix,
    x0: np.ndarray,
    master_seed: int,
    snapshot_every: int = 10,
    dnasa_literal_schedule: bool = False,
) -> Trajectory:
    """Run an algorithm for hp.big_t iterations and record its trajectory.

    All randomness derives from master_seed: oracle streams are keyed per
    (agent, iteration) and the final uniform output draw uses a dedicated
    stream, so a repeated call reproduces every byte of the trajectory.
    big_t = 0 records only the initial state. Box exits (any |x_ij| beyond
    the problem's certification box) are counted, not clamped.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r} (known: {', '.join(ALGORITHMS)})")
    if w.m != p.m:
        raise ValueError(f"mixing matrix couples {w.m} agents but the problem has {p.m}")
    if snapshot_every < 0:
        raise ValueError("snapshot_every must be non-negative")
    streams = RunStreams(master_seed)

    if algorithm == "dnsgd":
        state = dnsgd_init(p, x0, hp, w, streams)
    else:
        state = baseline_init(p, x0, hp, w, streams)

    rows: list[MetricsRow] = []
    drifts: list[float] = []
    agent_norms: list[np.ndarray] = []
    snapshots: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    box_exits = 0
    first_exit: int | None = None

    def record(s: OptimizerState) -> None:
        nonlocal box_exits, first_exit
        sm = state_metrics(s.x, s.v, p, hp.eta)
        rows.append(
            MetricsRow(
                t=s.t, f_mean=sm.f_mean, grad_norm_mean=sm.grad_norm_mean,
                grad_norm_agent_max=float(sm.agent_grad_norms.max()),
                cons_x=sm.cons_x, cons_v=sm.cons_v, phi=sm.phi,
                samples_per_agent=s.samples_per_agent, comm_rounds=s.comm_rounds,
            )
        )
        agent_norms.append(sm.agent_grad_norms)
        drifts.append(_tracker_drift(s))
        if np.abs(s.x).max() > p.box_radius:
            box_exits += 1
            if first_exit is None:
                first_exit = s.t
        if snapshot_every and s.t % snapshot_every == 0:
            snapshots[s.t] = (s.x.copy(), s.v.copy())

    record(state)
    for _ in range(hp.big_t):
        if algorithm == "dnsgd":
            state = dnsgd_step(state, p, hp, w, streams)
        elif algorithm == "dsgd":
            state = dsgd_step(state, p, hp, w, streams)
        elif algorithm == "dsgt":
            state = dsgt_step(state, p, hp, w, streams)
        else:
            state = dnasa_step(state, p, hp, w, streams, literal_schedule=dnasa_literal_schedule)
        record(state)
    if snapshot_every and state.t not in snapshots:
        snapshots[state.t] = (state.x.copy(), state.v.copy())

    if hp.big_t > 0:
        output_indices = streams.output_draw().integers(0, hp.big_t, size=p.m)
    else:
        output_indices = None
    return Trajectory(
        algorithm=algorithm,
        rows=rows,
        agent_grad_norms=np.array(agent_norms),
        tracker_drifts=np.array(drifts),
        output_indices=output_indices,
        snapshots=snapshots,
        box_exits=box_exits,
        first_box_exit_t=first_exit,
    )
