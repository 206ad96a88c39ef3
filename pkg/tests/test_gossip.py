"""Gossip routines: contraction, mean preservation, frozen spectral values."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dnsgd.gossip import (
    acc_gossip,
    chebyshev_weight,
    consensus_error,
    contraction_rho,
    min_rounds_for_rho,
    plain_gossip,
)
from dnsgd.topology import build_topology, metropolis_mixing

RING4 = metropolis_mixing(build_topology("ring", 4))
RING8 = metropolis_mixing(build_topology("ring", 8))


def test_chebyshev_weight_frozen_value():
    # lambda2 = sqrt(5)/3 makes sqrt(1 - lambda2^2) = 2/3, so the weight is
    # (1 - 2/3) / (1 + 2/3) = 1/5
    assert chebyshev_weight(math.sqrt(5.0) / 3.0) == pytest.approx(0.2, abs=1e-15)
    assert chebyshev_weight(0.0) == 0.0


def test_contraction_rho_frozen_values():
    assert contraction_rho(0.5, 0) == pytest.approx(math.sqrt(14.0), abs=1e-15)
    # lambda2 = 0: per-round rate is 1/sqrt(2), so one round gives sqrt(7)
    assert contraction_rho(0.0, 1) == pytest.approx(math.sqrt(7.0), rel=1e-15)
    assert contraction_rho(0.9, 50) < contraction_rho(0.9, 10)


def test_min_rounds_for_rho_is_tight():
    for lam2 in (0.3, 0.666, 0.95):
        for target in (0.9, 0.5, 1e-3):
            k = min_rounds_for_rho(lam2, target)
            assert contraction_rho(lam2, k) <= target
            if k > 0:
                assert contraction_rho(lam2, k - 1) > target
    assert min_rounds_for_rho(0.5, math.sqrt(14.0) + 1.0) == 0
    with pytest.raises(ValueError):
        min_rounds_for_rho(0.5, 0.0)


def test_plain_gossip_one_hot_reads_matrix_column():
    y0 = np.zeros((4, 1))
    y0[0, 0] = 1.0
    out = plain_gossip(y0, RING4, 1)
    assert np.allclose(out[:, 0], [2 / 3, 1 / 6, 0.0, 1 / 6], atol=1e-15)


def test_plain_gossip_composes_bitwise():
    rng = np.random.default_rng(0)
    y0 = rng.standard_normal((4, 3))
    once_then_twice = plain_gossip(plain_gossip(y0, RING4, 2), RING4, 1)
    assert np.array_equal(plain_gossip(y0, RING4, 3), once_then_twice)
    assert np.array_equal(plain_gossip(y0, RING4, 0), y0)


def test_consensus_is_fixed_point():
    y0 = np.tile([1.5, -2.0, 0.25], (8, 1))
    for k in (0, 1, 5):
        assert np.allclose(acc_gossip(y0, RING8, k), y0, atol=1e-12)
        assert np.allclose(plain_gossip(y0, RING8, k), y0, atol=1e-12)
    assert consensus_error(y0) == 0.0


def test_acc_gossip_contraction_bound_ring4():
    rng = np.random.default_rng(42)
    for trial in range(20):
        y0 = rng.standard_normal((4, 6)) * 10.0
        e0 = consensus_error(y0)
        for k in range(21):
            ek = consensus_error(acc_gossip(y0, RING4, k))
            assert ek <= contraction_rho(RING4.lambda2, k) * e0 * (1.0 + 1e-12)


def test_acc_gossip_deep_run_reaches_consensus():
    rng = np.random.default_rng(3)
    y0 = rng.standard_normal((8, 5))
    out = acc_gossip(y0, RING8, 200)
    assert consensus_error(out) <= 1e-8 * consensus_error(y0)
    assert np.allclose(out.mean(axis=0), y0.mean(axis=0), atol=1e-10)


def test_acc_gossip_beats_plain_gossip_on_slow_graph():
    ring16 = metropolis_mixing(build_topology("ring", 16))
    rng = np.random.default_rng(9)
    y0 = rng.standard_normal((16, 4))
    k = 30
    acc = consensus_error(acc_gossip(y0, ring16, k))
    plain = consensus_error(plain_gossip(y0, ring16, k))
    assert acc < plain / 10.0


@settings(max_examples=60, deadline=None)
@given(
    arrays(
        np.float64,
        (8, 3),
        elements=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    ),
    st.integers(min_value=0, max_value=12),
)
def test_mean_preserved_for_any_input(y0, k):
    out = acc_gossip(y0, RING8, k)
    scale = max(1.0, float(np.abs(y0).max()))
    assert np.allclose(out.mean(axis=0), y0.mean(axis=0), atol=1e-10 * scale)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=25))
def test_contraction_rho_monotone_in_k(k):
    assert contraction_rho(0.7, k + 1) <= contraction_rho(0.7, k)


def test_argument_validation():
    y0 = np.zeros((4, 2))
    with pytest.raises(ValueError):
        acc_gossip(y0, RING4, -1)
    with pytest.raises(ValueError):
        acc_gossip(y0, RING4, True)
    with pytest.raises(ValueError):
        acc_gossip(np.zeros((3, 2)), RING4, 1)  # row count mismatch
    with pytest.raises(ValueError):
        acc_gossip(np.array([1.0, 2.0, 3.0, 4.0]), RING4, 1)  # not 2-d
    with pytest.raises(ValueError):
        chebyshev_weight(1.0)
    with pytest.raises(ValueError):
        chebyshev_weight(-0.1)
