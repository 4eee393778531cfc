import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphaproj import (
    AlphaOrder,
    Regime,
    alpha_exp,
    alpha_log,
    hellinger_divergence,
    make_distribution,
    relative_alpha_entropy,
    relative_entropy,
    renyi_divergence,
    renyi_from_hellinger,
    total_variation,
    tsallis_entropy,
    uniform,
)

from conftest import dist_tuple

U4 = uniform(["1", "2", "3", "4"])
P_STAR = make_distribution(["1", "2", "3", "4"], [0.9, 0.1, 0, 0])
HALF = make_distribution(["x", "y"], [0.5, 0.5])
QUARTER = make_distribution(["x", "y"], [0.25, 0.75])
POINT = make_distribution(["x", "y"], [1, 0])

GRID = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0, math.inf)


def test_alpha_order_regimes():
    assert AlphaOrder(0).regime is Regime.ZERO
    assert AlphaOrder(0.5).regime is Regime.SUB_ONE
    assert AlphaOrder(1).regime is Regime.ONE
    assert AlphaOrder(3).regime is Regime.SUPER_ONE
    assert AlphaOrder(math.inf).regime is Regime.INFINITY
    for bad in (-1, math.nan):
        with pytest.raises(ValueError):
            AlphaOrder(bad)


def test_renyi_examples():
    for a in GRID:
        assert renyi_divergence(P_STAR, P_STAR, a) == 0
    # -2 ln(0.5 (sqrt(0.9) + sqrt(0.1)))
    hand = -2 * math.log(0.5 * (math.sqrt(0.9) + math.sqrt(0.1)))
    assert renyi_divergence(P_STAR, U4, 0.5) == pytest.approx(hand, abs=1e-15)
    assert renyi_divergence(P_STAR, U4, 0.5) == pytest.approx(0.916291, abs=1e-6)
    assert renyi_divergence(HALF, QUARTER, 2) == pytest.approx(math.log(4 / 3), abs=1e-15)
    assert renyi_divergence(POINT, QUARTER, 0) == pytest.approx(math.log(4), abs=1e-15)


def test_renyi_limits_and_infinities():
    assert renyi_divergence(HALF, QUARTER, math.inf) == pytest.approx(math.log(2), abs=1e-15)
    assert renyi_divergence(U4, P_STAR, 2) == math.inf
    assert renyi_divergence(U4, P_STAR, math.inf) == math.inf
    # For alpha < 1 the symbols outside Supp(Q) simply drop out.
    assert math.isfinite(renyi_divergence(U4, P_STAR, 0.5))
    disjoint = make_distribution(["x", "y"], [0, 1])
    assert renyi_divergence(POINT, disjoint, 0.5) == math.inf
    assert renyi_divergence(POINT, disjoint, 0) == math.inf


def test_hellinger_examples():
    P = make_distribution(["a", "b", "c"], [0.2, 0.3, 0.5])
    assert hellinger_divergence(P, P, 3) == 0
    assert hellinger_divergence(HALF, QUARTER, 2) == pytest.approx(1 / 3, abs=1e-15)
    hand = 2 * (1 - 0.5 * (math.sqrt(0.9) + math.sqrt(0.1)))
    assert hellinger_divergence(P_STAR, U4, 0.5) == pytest.approx(hand, abs=1e-15)
    assert hellinger_divergence(P_STAR, U4, 0.5) == pytest.approx(0.735089, abs=1e-6)
    assert hellinger_divergence(HALF, QUARTER, 1) == relative_entropy(HALF, QUARTER)
    for bad in (0, math.inf):
        with pytest.raises(ValueError):
            hellinger_divergence(HALF, QUARTER, bad)


def test_renyi_from_hellinger_examples():
    assert renyi_from_hellinger(0, 2) == 0
    assert renyi_from_hellinger(1 / 3, 2) == pytest.approx(math.log(4 / 3), abs=1e-15)
    assert renyi_from_hellinger(math.inf, 2) == math.inf
    assert renyi_from_hellinger(2.0, 0.5) == math.inf
    with pytest.raises(ValueError):
        renyi_from_hellinger(3.0, 0.5)
    with pytest.raises(ValueError):
        renyi_from_hellinger(0.1, 1)


def test_relative_entropy_examples():
    assert relative_entropy(HALF, HALF) == 0
    assert relative_entropy(POINT, HALF) == pytest.approx(math.log(2), abs=1e-15)
    assert relative_entropy(HALF, POINT) == math.inf


def test_relative_alpha_entropy_examples():
    P = make_distribution(["x", "y"], [0.9, 0.1])
    assert relative_alpha_entropy(P, P, 0.7) == 0
    assert relative_alpha_entropy(P, HALF, 1) == relative_entropy(P, HALF)
    assert relative_alpha_entropy(P, HALF, 0.5) == pytest.approx(math.log(1.25), abs=1e-15)


def test_tsallis_examples():
    assert tsallis_entropy(POINT, 2.5) == 0
    assert tsallis_entropy(HALF, 2) == pytest.approx(0.5, abs=1e-16)
    assert tsallis_entropy(HALF, 1) == pytest.approx(math.log(2), abs=1e-16)


def test_alpha_exp_log_examples():
    for a in (0.3, 1.0, 2.0):
        assert alpha_log(1.0, a) == 0
    assert alpha_exp(-3, 0.5) == 0
    assert alpha_exp(2.0, 1) == pytest.approx(math.exp(2.0))
    with pytest.raises(ValueError):
        alpha_log(0.0, 0.5)
    xs = np.array([1e-3, 0.2, 1.0, 3.0, 50.0])
    for a in (0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 4.0):
        back = alpha_exp(alpha_log(xs, a), a)
        assert np.max(np.abs(back - xs) / xs) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(dist_tuple(2))
def test_monotone_in_alpha(pair):
    P, Q = pair
    d = [renyi_divergence(P, Q, a) for a in GRID]
    h = [hellinger_divergence(P, Q, a) for a in GRID if 0 < a < math.inf]
    for seq in (d, h):
        for lo, hi in zip(seq, seq[1:]):
            assert hi == math.inf or lo <= hi + 1e-12


@settings(max_examples=300, deadline=None)
@given(dist_tuple(2), st.sampled_from([0.25, 0.5, 0.75, 1.5, 2.0, 4.0]))
def test_renyi_hellinger_consistency(pair, a):
    P, Q = pair
    d = renyi_divergence(P, Q, a)
    d2 = renyi_from_hellinger(hellinger_divergence(P, Q, a), a)
    if math.isinf(d):
        assert math.isinf(d2)
    elif math.isfinite(d2):
        # log1p(-(1 - S)) amplifies the round-off of the stored Hellinger
        # value by 1/S, where S = sum p^a q^(1-a); S is tiny only for
        # nearly disjoint pairs.
        S = 1 + (a - 1) * hellinger_divergence(P, Q, a)
        slack = 8 * np.finfo(float).eps * max(1.0, abs(S - 1)) / (max(S, 1e-300) * abs(a - 1))
        assert abs(d - d2) <= 1e-12 + slack


@settings(max_examples=300, deadline=None)
@given(dist_tuple(2))
def test_pinsker(pair):
    P, Q = pair
    assert total_variation(P, Q) ** 2 / 2 <= relative_entropy(P, Q)


@settings(max_examples=300, deadline=None)
@given(dist_tuple(2))
def test_nonnegative_and_zero_only_at_equality(pair):
    P, Q = pair
    for a in GRID:
        assert renyi_divergence(P, Q, a) >= 0
        assert renyi_divergence(P, P, a) == 0
    if total_variation(P, Q) > 1e-3:
        assert renyi_divergence(P, Q, 0.5) > 0


@settings(max_examples=200, deadline=None)
@given(dist_tuple(2, full_support=True), st.sampled_from([-1e-5, -1e-6, 1e-6, 1e-5]))
def test_continuity_at_one(pair, eps):
    P, Q = pair
    assert abs(renyi_divergence(P, Q, 1 + eps) - relative_entropy(P, Q)) <= 1e-4


@settings(max_examples=200, deadline=None)
@given(dist_tuple(1))
def test_tsallis_uniform_identity(single):
    (P,) = single
    W = len(P)
    U = uniform(P.alphabet)
    for a in (0.5, 2.0, 3.0):
        S = tsallis_entropy(P, a)
        rhs = math.log(W) + math.log(1 - (a - 1) * S) / (a - 1)
        assert renyi_divergence(P, U, a) == pytest.approx(rhs, abs=1e-12)
