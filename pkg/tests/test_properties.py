"""Property-based checks of the numerical invariants the games lean on."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from unlearn_audit.core import ClassDistribution, LossKind, evaluate_loss
from unlearn_audit.estimators import gini_impurity, soft_threshold
from unlearn_audit.games import multiset_f1, wilson_interval

probs3 = st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3).map(
    lambda v: np.asarray(v) / sum(v)
)


@given(wins=st.integers(0, 500), extra=st.integers(0, 500))
def test_wilson_interval_brackets_estimate(wins, extra):
    trials = wins + extra + 1
    wins = min(wins, trials)
    low, high = wilson_interval(wins, trials)
    assert 0.0 <= low <= wins / trials <= high <= 1.0


@given(wins=st.integers(0, 200), trials_extra=st.integers(1, 200))
def test_wilson_interval_narrows_with_more_trials(wins, trials_extra):
    trials = wins + trials_extra
    low1, high1 = wilson_interval(wins, trials)
    low2, high2 = wilson_interval(4 * wins, 4 * trials)
    assert (high2 - low2) <= (high1 - low1) + 1e-12


tokens = st.lists(st.integers(0, 6), max_size=12)


@given(a=tokens, b=tokens)
def test_multiset_f1_bounds_and_symmetry(a, b):
    f1 = multiset_f1(a, b)
    assert 0.0 <= f1 <= 1.0
    assert f1 == multiset_f1(b, a)


@given(a=tokens)
def test_multiset_f1_identity(a):
    assert multiset_f1(a, a) == 1.0
    assert multiset_f1(a, list(reversed(a))) == 1.0


@given(a=tokens, b=tokens)
def test_multiset_f1_perfect_iff_same_multiset(a, b):
    f1 = multiset_f1(a, b)
    assert (f1 == 1.0) == (sorted(a) == sorted(b))


@given(y_hat=st.floats(-1e6, 1e6), y=st.floats(-1e6, 1e6))
def test_squared_loss_non_negative(y_hat, y):
    assert evaluate_loss(LossKind.SQUARED, y_hat, y) >= 0.0


@given(p=probs3, label=st.integers(0, 2))
def test_classifier_losses_non_negative(p, label):
    d = ClassDistribution((0, 1, 2), p)
    assert evaluate_loss(LossKind.ZERO_ONE, d, label) in (0.0, 1.0)
    assert evaluate_loss(LossKind.NLL, d, label) >= 0.0


@given(counts=st.lists(st.integers(0, 50), min_size=1, max_size=6))
def test_gini_bounds(counts):
    g = gini_impurity(np.asarray(counts, dtype=float))
    k = len(counts)
    assert 0.0 <= g <= 1.0 - 1.0 / k + 1e-12


@given(x=st.floats(-100, 100), t=st.floats(0, 50))
def test_soft_threshold_shrinks_toward_zero(x, t):
    s = soft_threshold(x, t)
    assert abs(s) <= abs(x)
    assert s * x >= 0.0  # never flips sign


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000))
def test_challenge_bit_independent_of_pair(seed):
    # the challenge bit stream is a fair coin regardless of the data seed
    from unlearn_audit.seeding import child_rng
    rng = child_rng(seed, "game", 0)
    rng.permutation(10)
    bits = [int(rng.integers(2)) for _ in range(16)]
    assert set(bits) <= {0, 1}
