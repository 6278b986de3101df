"""Attack-level unit tests against scripted oracles.

A scripted oracle returns canned predictions, so every algebraic example can
be checked without training anything.
"""

import numpy as np
import pytest

from unlearn_audit.attacks import (
    GuessBit,
    disagreement_majority,
    confidence_drop_label,
    extrapolated_label,
    fair_coin,
    loss_increase_attack,
    loss_threshold_membership,
    membership_loss_confidence,
    membership_reduction_attack,
    prediction_shift_attack,
    reconstruction_to_inference,
    tune_extrapolation,
)
from unlearn_audit.attacks.metrics import METRICS, hamming, l1_confidence, zero_one_exact
from unlearn_audit.core import (
    ClassDistribution,
    Dataset,
    Example,
    LossKind,
    Oracle,
    Phase,
    PhaseClosedError,
)
from unlearn_audit.data import DataSpec
from unlearn_audit.learners import LearnerSpec, train
from unlearn_audit.unlearning import DeletionRequest, delete_examples


class ScriptedModel:
    def __init__(self, table):
        self.table = {k: v for k, v in table.items()}

    def predict(self, x):
        return self.table[tuple(np.asarray(x))]

    def predict_batch(self, xs):
        return [self.predict(x) for x in xs]


def scripted_oracle(table, phase=Phase.BEFORE_DELETION, hook=None):
    return Oracle(ScriptedModel(table), phase, on_first_query=hook)


def paired(table_before, table_after):
    before = scripted_oracle(table_before)
    after = Oracle(ScriptedModel(table_after), Phase.AFTER_DELETION, on_first_query=before.close)
    return before, after


X0, X1 = (0.0,), (1.0,)
E0 = Example(np.asarray(X0), 1.0)
E1 = Example(np.asarray(X1), 1.0)


class TestLossIncreaseAttack:
    def test_direct_formula(self):
        # losses: before (0.1, 0.2) after (0.9, 0.1) -> alpha = 0.9 -> guess 0
        before, after = paired(
            {X0: 1.0 + np.sqrt(0.1), X1: 1.0 + np.sqrt(0.2)},
            {X0: 1.0 + np.sqrt(0.9), X1: 1.0 + np.sqrt(0.1)},
        )
        guess = loss_increase_attack(E0, E1, before, after, LossKind.SQUARED, np.random.default_rng(0))
        assert guess == GuessBit(0)
        assert before.query_count == 2 and after.query_count == 2

    def test_identical_challenges_tie(self):
        before, after = paired({X0: 2.0}, {X0: 3.0})
        guess = loss_increase_attack(E0, E0, before, after, LossKind.SQUARED, np.random.default_rng(1))
        assert guess.tie_broken

    def test_guess_depends_only_on_sign_of_alpha(self):
        # hence any positive rescaling of the loss leaves the guess unchanged
        rng_vals = np.random.default_rng(3)
        for _ in range(50):
            lb0, lb1, la0, la1 = rng_vals.uniform(0, 4, size=4)
            before, after = paired(
                {X0: 1.0 + np.sqrt(lb0), X1: 1.0 + np.sqrt(lb1)},
                {X0: 1.0 + np.sqrt(la0), X1: 1.0 + np.sqrt(la1)},
            )
            guess = loss_increase_attack(
                E0, E1, before, after, LossKind.SQUARED, np.random.default_rng(0)
            )
            alpha = (la0 - lb0) - (la1 - lb1)
            assert guess.value == (0 if alpha > 0 else 1)

    def test_tree_deletion_six_points(self):
        # alternating 1-d labels: the deleted point's region flips class
        ds = Dataset([Example(np.asarray([float(i)]), i % 2) for i in range(6)])
        spec = LearnerSpec.tree()
        h = train(spec, ds)
        _, h_del = delete_examples(spec, ds, DeletionRequest([0]))
        before = Oracle(h, Phase.BEFORE_DELETION)
        after = Oracle(h_del, Phase.AFTER_DELETION, on_first_query=before.close)
        guess = loss_increase_attack(ds[0], ds[3], before, after, LossKind.ZERO_ONE, np.random.default_rng(0))
        assert guess == GuessBit(0)

    def test_phase_discipline_enforced(self):
        before, after = paired({X0: 1.0, X1: 1.0}, {X0: 1.0, X1: 1.0})
        after.query(np.asarray(X0))
        with pytest.raises(PhaseClosedError):
            before.query(np.asarray(X0))


class TestPredictionShiftAttack:
    def test_regression_shift(self):
        before, after = paired({X0: 1.0, X1: 2.0}, {X0: 3.0, X1: 2.1})
        guess = prediction_shift_attack(
            np.asarray(X0), np.asarray(X1), before, after, METRICS["abs"], np.random.default_rng(0)
        )
        assert guess == GuessBit(0)

    def test_unchanged_predictions_tie(self):
        before, after = paired({X0: 1.0, X1: 2.0}, {X0: 1.0, X1: 2.0})
        guess = prediction_shift_attack(
            np.asarray(X0), np.asarray(X1), before, after, METRICS["abs"], np.random.default_rng(0)
        )
        assert guess.tie_broken

    def test_confidence_l1(self):
        d = lambda p: ClassDistribution((0, 1), np.asarray(p))
        before, after = paired(
            {X0: d([0.9, 0.1]), X1: d([0.5, 0.5])},
            {X0: d([0.4, 0.6]), X1: d([0.5, 0.5])},
        )
        guess = prediction_shift_attack(
            np.asarray(X0), np.asarray(X1), before, after, METRICS["l1-confidence"],
            np.random.default_rng(0),
        )
        assert guess == GuessBit(0)
        assert l1_confidence(d([0.9, 0.1]), d([0.4, 0.6])) == pytest.approx(1.0)


class TestMembershipAttacks:
    def test_threshold_rule(self):
        oracle = scripted_oracle({X0: 1.0})
        assert loss_threshold_membership(E0, oracle, tau=0.5, loss=LossKind.SQUARED) == 1
        oracle = scripted_oracle({X0: 1.0 + np.sqrt(10.0)})
        assert loss_threshold_membership(E0, oracle, tau=0.5, loss=LossKind.SQUARED) == 0

    def test_reduction_decision_table(self):
        rng = np.random.default_rng(0)
        results = {}
        for b0 in (0, 1):
            for b1 in (0, 1):
                bits = {X0: b0, X1: b1}
                def mi(e, oracle, bits=bits):
                    return bits[tuple(e.x)]
                before, after = paired({}, {})
                results[(b0, b1)] = membership_reduction_attack(
                    E0, E1, before, after, rng, mi_bit=mi
                )
        assert results[(0, 1)] == GuessBit(0)
        assert results[(1, 0)] == GuessBit(1)
        assert results[(0, 0)].tie_broken and results[(1, 1)].tie_broken

    def test_perfect_membership_oracle_wins_always(self):
        deleted = {0: X0, 1: X1}
        rng = np.random.default_rng(5)
        for b in (0, 1):
            def mi(e, oracle, b=b):
                return 0 if tuple(e.x) == deleted[b] else 1
            before, after = paired({}, {})
            guess = membership_reduction_attack(E0, E1, before, after, rng, mi_bit=mi)
            assert guess.value == b

    def test_confidence_mode_orders_queries_safely(self):
        before, after = paired({X0: 1.0, X1: 1.0}, {X0: 4.0, X1: 1.0})
        def conf(e, oracle):
            return membership_loss_confidence(e, oracle, LossKind.SQUARED)
        guess = membership_reduction_attack(
            E0, E1, before, after, np.random.default_rng(0), mi_confidence=conf
        )
        assert guess == GuessBit(0)  # e0's confidence dropped more


class TestMajorityReconstruction:
    def _oracles(self, flips):
        d = lambda c: ClassDistribution((0, 1), np.asarray([1.0, 0.0]) if c == 0 else np.asarray([0.0, 1.0]))
        table_before = {}
        table_after = {}
        for x in flips:
            table_before[x] = d(0)
            table_after[x] = d(1)
        return table_before, table_after

    def test_column_majorities(self):
        flipped = [(1.0, 0.0, 1.0), (1.0, 0.0, 0.0), (1.0, 1.0, 1.0)]
        tb, ta = self._oracles(flipped)
        before, after = paired(tb, ta)
        out = disagreement_majority(before, after, [np.asarray(x) for x in flipped])
        assert np.array_equal(out.instance, [1.0, 0.0, 1.0])
        assert not out.empty_disagreement
        assert before.query_count == 3 and after.query_count == 3

    def test_per_coordinate_tie_resolves_to_zero(self):
        flipped = [(1.0, 0.0), (0.0, 1.0)]
        tb, ta = self._oracles(flipped)
        before, after = paired(tb, ta)
        out = disagreement_majority(before, after, [np.asarray(x) for x in flipped])
        assert np.array_equal(out.instance, [0.0, 0.0])

    def test_empty_disagreement_flag(self):
        d = ClassDistribution((0,), np.asarray([1.0]))
        aux = [np.asarray((1.0, 1.0))]
        before, after = paired({(1.0, 1.0): d}, {(1.0, 1.0): d})
        out = disagreement_majority(before, after, aux)
        assert out.empty_disagreement
        assert np.array_equal(out.instance, [0.0, 0.0])


class TestLabelAttacks:
    def test_confidence_drop_argmin(self):
        d = lambda p: ClassDistribution((0, 1, 2), np.asarray(p))
        before, after = paired(
            {X0: d([0.5, 0.3, 0.2]), X1: d([0.4, 0.3, 0.3])},
            {X0: d([0.35, 0.4, 0.25]), X1: d([0.25, 0.4, 0.35])},
        )
        # mass changes: class0 -0.3, class1 +0.2, class2 +0.1
        probes = [np.asarray(X0), np.asarray(X1)]
        assert confidence_drop_label(before, after, probes, [0, 1, 2]) == 0

    def test_identical_oracles_tie_to_smallest_class(self):
        d = ClassDistribution((0, 1, 2), np.asarray([0.3, 0.4, 0.3]))
        before, after = paired({X0: d}, {X0: d})
        assert confidence_drop_label(before, after, [np.asarray(X0)], [2, 1, 0]) == 0

    def test_extrapolation_formula(self):
        before, after = paired({X0: 2.0}, {X0: 1.5})
        assert extrapolated_label(np.asarray(X0), before, after, lam=2.0) == pytest.approx(3.0)

    def test_lambda_zero_is_identity(self):
        before, after = paired({X0: 2.0}, {X0: 1.5})
        assert extrapolated_label(np.asarray(X0), before, after, lam=0.0) == pytest.approx(2.0)

    def test_no_deletion_signal_means_lambda_irrelevant(self):
        for lam in (0.0, 3.0, 40.0):
            before, after = paired({X0: 2.0}, {X0: 2.0})
            assert extrapolated_label(np.asarray(X0), before, after, lam=lam) == pytest.approx(2.0)

    def test_tune_single_candidate(self):
        data = DataSpec(kind="linear", n=20, d=2, noise=0.1)
        assert tune_extrapolation(LearnerSpec.ols(), data, [0.0], trials=3, seed=1) == 0.0

    def test_tune_tie_returns_smallest(self):
        data = DataSpec(kind="linear", n=20, d=2, noise=0.1)
        spec = LearnerSpec.constant_regressor(value=0.0)  # deletion never changes predictions
        assert tune_extrapolation(spec, data, [4.0, 2.0, 9.0], trials=3, seed=1) == 2.0


class TestReconstructionToInference:
    def test_exact_hit_picks_zero(self):
        rec = lambda before, after, rng: E0
        guess = reconstruction_to_inference(
            rec, zero_one_exact, 0.0, E0, E1, *paired({}, {}), np.random.default_rng(0)
        )
        assert guess == GuessBit(0)

    def test_second_challenge_hit_picks_one(self):
        rec = lambda before, after, rng: np.asarray([1.0, 1.0, 0.0])
        c0, c1 = np.asarray([0.0, 0.0, 0.0]), np.asarray([1.0, 1.0, 1.0])
        guess = reconstruction_to_inference(
            rec, hamming, 1.0, c0, c1, *paired({}, {}), np.random.default_rng(0)
        )
        assert guess == GuessBit(1)

    def test_far_from_both_flips_coin(self):
        rec = lambda before, after, rng: np.asarray([1.0, 0.0, 1.0, 0.0])
        c0, c1 = np.zeros(4), np.ones(4)
        guess = reconstruction_to_inference(
            rec, hamming, 0.0, c0, c1, *paired({}, {}), np.random.default_rng(0)
        )
        assert guess.tie_broken


def test_coin_fairness():
    """Over many tie-breaks with fresh seeds, guess-0 stays within 2% of half."""
    zeros = sum(fair_coin(np.random.default_rng(seed)).value == 0 for seed in range(10_000))
    assert abs(zeros / 10_000 - 0.5) < 0.02


def test_metric_axioms():
    rng = np.random.default_rng(0)
    d3 = lambda p: ClassDistribution((0, 1, 2), np.asarray(p))
    for _ in range(100):
        a, b = rng.integers(0, 2, size=(2, 8)).astype(float)
        for name in ("hamming", "normalized-hamming", "exact"):
            m = METRICS[name]
            assert m(a, b) == m(b, a) >= 0.0
            assert m(a, a) == 0.0
        p, q = d3(rng.dirichlet([1] * 3)), d3(rng.dirichlet([1] * 3))
        assert l1_confidence(p, q) == pytest.approx(l1_confidence(q, p))
        assert l1_confidence(p, p) == 0.0
        assert 0.0 <= METRICS["normalized-hamming"](a, b) <= 1.0


def test_threshold_calibration_separates_members():
    """Median holdout loss as the threshold: training points clear it more
    often than fresh points, the signal the reduction baseline rides on."""
    from unlearn_audit.data import gen_linear_regression

    train_ds = gen_linear_regression(80, 4, noise_sigma=0.2, seed=21)
    holdout = gen_linear_regression(80, 4, noise_sigma=0.2, seed=22, weights_from=21)
    model = train(LearnerSpec.ols(), train_ds)
    oracle = Oracle(model, Phase.BEFORE_DELETION)
    holdout_losses = sorted(
        -membership_loss_confidence(e, oracle, LossKind.SQUARED) for e in holdout
    )
    tau = float(np.median(holdout_losses))
    member_rate = np.mean([
        loss_threshold_membership(e, oracle, tau, LossKind.SQUARED) for e in train_ds
    ])
    fresh_rate = np.mean([
        loss_threshold_membership(e, oracle, tau, LossKind.SQUARED) for e in holdout
    ])
    assert member_rate > fresh_rate
