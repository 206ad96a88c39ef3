"""Gossip averaging primitives.

acc_gossip runs the Chebyshev-accelerated consensus recursion

    Y(k+1) = (1 + eta_w) * W @ Y(k) - eta_w * Y(k-1),   Y(-1) = Y(0),

with eta_w = (1 - sqrt(1 - lambda2^2)) / (1 + sqrt(1 - lambda2^2)). The loop
runs for k = 0..K inclusive, so a call with parameter K multiplies by W
K + 1 times; the contraction bound below is stated for exponent K and the
returned matrix can only be tighter. Column means are preserved exactly in
exact arithmetic because W is doubly stochastic.

plain_gossip is the unaccelerated W^k map used by the baseline optimizers.
"""

from __future__ import annotations

import math

import numpy as np

from .topology import MixingMatrix

# Contraction bound constants: error after k accelerated rounds is at most
# sqrt(14) * (1 - (1 - 1/sqrt(2)) * sqrt(1 - lambda2))^k times the initial
# deviation from consensus.
C1 = math.sqrt(14.0)
C2 = 1.0 - 1.0 / math.sqrt(2.0)


def _check_rounds(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 0:
        raise ValueError(f"round count must be a non-negative integer, got {k!r}")


def _check_agent_matrix(y: np.ndarray, mix: MixingMatrix) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError(f"agent matrix must be 2-d (agents x coords), got ndim {y.ndim}")
    if y.shape[0] != mix.m:
        raise ValueError(
            f"agent matrix has {y.shape[0]} rows but the mixing matrix couples {mix.m} agents"
        )
    if not np.all(np.isfinite(y)):
        raise ValueError("agent matrix contains non-finite entries")
    return y


def chebyshev_weight(lambda2: float) -> float:
    """Momentum weight of the accelerated recursion for a given lambda2."""
    if not 0.0 <= lambda2 < 1.0:
        raise ValueError(f"lambda2 must lie in [0, 1), got {lambda2}")
    s = math.sqrt(1.0 - lambda2 * lambda2)
    return (1.0 - s) / (1.0 + s)


def acc_gossip(y0: np.ndarray, mix: MixingMatrix, k: int) -> np.ndarray:
    """Accelerated gossip: k + 1 mixing rounds of the Chebyshev recursion."""
    _check_rounds(k)
    y0 = _check_agent_matrix(y0, mix)
    eta_w = chebyshev_weight(mix.lambda2)
    w = mix.w
    y_prev = y0
    y = y0
    for _ in range(k + 1):
        y_next = (1.0 + eta_w) * (w @ y) - eta_w * y_prev
        y_prev = y
        y = y_next
    return y


def plain_gossip(y0: np.ndarray, mix: MixingMatrix, k: int) -> np.ndarray:
    """Unaccelerated gossip: returns W^k @ y0 (k = 0 returns a copy of y0)."""
    _check_rounds(k)
    y0 = _check_agent_matrix(y0, mix)
    y = y0.copy()
    for _ in range(k):
        y = mix.w @ y
    return y


def contraction_rho(lambda2: float, k: int) -> float:
    """Worst-case consensus contraction factor after k accelerated rounds."""
    if not 0.0 <= lambda2 < 1.0:
        raise ValueError(f"lambda2 must lie in [0, 1), got {lambda2}")
    _check_rounds(k)
    return C1 * (1.0 - C2 * math.sqrt(1.0 - lambda2)) ** k


def min_rounds_for_rho(lambda2: float, rho_target: float) -> int:
    """Smallest k with contraction_rho(lambda2, k) <= rho_target."""
    if rho_target <= 0.0:
        raise ValueError("rho_target must be positive")
    if rho_target >= C1:
        return 0
    base = 1.0 - C2 * math.sqrt(1.0 - lambda2)
    k = math.ceil(math.log(rho_target / C1) / math.log(base))
    # Guard against float edge cases at the ceiling boundary.
    while contraction_rho(lambda2, k) > rho_target:
        k += 1
    return k


def consensus_error(y: np.ndarray) -> float:
    """Frobenius distance of an agent matrix from its row average."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.linalg.norm(y - y.mean(axis=0, keepdims=True)))
