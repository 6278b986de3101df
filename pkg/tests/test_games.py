import math

import numpy as np
import pytest

from unlearn_audit.data import DataSpec
from unlearn_audit.games import (
    ConfigInvalidError,
    GameConfig,
    multiset_f1,
    run_deletion_inference,
    run_known_instance,
    run_reconstruction,
    validate_config,
    wilson_interval,
)
from unlearn_audit.learners import LearnerSpec

LINEAR = DataSpec(kind="linear", n=40, d=3, noise=0.1)
BLOBS = DataSpec(kind="blobs", n=45, d=4, classes=3, spread=0.8)


def di_config(**kw):
    base = dict(
        learner=LearnerSpec.ols(), data=LINEAR, attacker="loss-increase",
        trials=50, seed=3, loss="squared",
    )
    base.update(kw)
    return GameConfig(**base)


class TestWilson:
    def test_zero_wins_boundary(self):
        low, high = wilson_interval(0, 1)
        assert low == 0.0
        assert high < 1.0

    def test_all_wins_boundary(self):
        low, high = wilson_interval(300, 300)
        assert high == 1.0
        assert low > 0.9

    def test_symmetry_at_half(self):
        low, high = wilson_interval(50, 100)
        assert low < 0.5 < high
        assert (0.5 - low) == pytest.approx(high - 0.5, abs=1e-12)

    def test_frozen_value_95_of_100(self):
        # computed independently from the closed-form Wilson formula
        low, high = wilson_interval(95, 100)
        assert low == pytest.approx(0.8882495307680808, abs=1e-12)
        assert high == pytest.approx(0.9784563208456319, abs=1e-12)

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 4)


class TestMultisetF1:
    def test_equal_sequences(self):
        assert multiset_f1(("a", "b"), ("a", "b")) == 1.0
        assert multiset_f1(("a", "b"), ("b", "a")) == 1.0  # unordered

    def test_partial_overlap(self):
        assert multiset_f1(("a", "b", "c"), ("a", "b", "d")) == pytest.approx(2 * 2 / 6)

    def test_multiplicity(self):
        assert multiset_f1(("a", "a", "b"), ("a", "b")) == pytest.approx(2 * 2 / 5)

    def test_both_empty_is_perfect(self):
        assert multiset_f1((), ()) == 1.0

    def test_one_empty(self):
        assert multiset_f1(("a",), ()) == 0.0


class TestValidation:
    def test_unknown_attacker(self):
        with pytest.raises(ConfigInvalidError):
            validate_config(di_config(attacker="nonsense"))

    def test_exclusive_variants(self):
        with pytest.raises(ConfigInvalidError):
            validate_config(di_config(instance_only=True, label_only=True))

    def test_example_attacker_needs_labels(self):
        with pytest.raises(ConfigInvalidError):
            validate_config(di_config(instance_only=True))

    def test_known_instance_needs_regression(self):
        with pytest.raises(ConfigInvalidError):
            validate_config(
                di_config(game="known-instance", learner=LearnerSpec.tree(), data=BLOBS)
            )


class TestDeletionInferenceGame:
    def test_replayability(self):
        a = run_deletion_inference(di_config())
        b = run_deletion_inference(di_config())
        assert a == b

    def test_workers_do_not_change_results(self):
        a = run_deletion_inference(di_config(trials=24))
        b = run_deletion_inference(di_config(trials=24), workers=2)
        assert a.trial_wins == b.trial_wins

    def test_always_zero_attacker_is_a_coin(self):
        stats = run_deletion_inference(di_config(attacker="always-zero", trials=400))
        assert stats.ci_low <= 0.5 <= stats.ci_high

    def test_challenge_bit_balance(self):
        # always-0 wins exactly when b == 0, so wins count the b distribution
        stats = run_deletion_inference(di_config(attacker="always-zero", trials=400))
        wins = stats.wins
        # two-sided exact binomial test at the 1% level
        p = sum(math.comb(400, k) for k in range(0, min(wins, 400 - wins) + 1)) / 2**400
        assert 2 * p > 0.01

    def test_query_budget_accounting(self):
        stats = run_deletion_inference(di_config(trials=30))
        assert stats.mean_queries_before == 2.0
        assert stats.mean_queries_after == 2.0

    def test_batch_variant_scores_all_pairs(self):
        stats = run_deletion_inference(di_config(batch_size=3, trials=10))
        assert stats.trials == 10 * 9

    def test_batch_variant_keeps_signal(self):
        stats = run_deletion_inference(
            di_config(batch_size=3, trials=60, data=DataSpec(kind="linear", n=60, d=3, noise=0.1))
        )
        assert stats.estimate > 0.65

    def test_deletion_hiding_variant_runs(self):
        stats = run_deletion_inference(di_config(deletion_hiding=True, trials=60))
        assert stats.estimate > 0.7
        assert stats.collisions == 0  # continuous data never collides

    def test_label_only_variant(self):
        cfg = GameConfig(
            learner=LearnerSpec.logistic(), data=BLOBS, attacker="label-match",
            attacker_params=(("probes", 60),), trials=40, seed=5, loss="nll",
            label_only=True,
        )
        stats = run_deletion_inference(cfg)
        assert 0.0 <= stats.estimate <= 1.0

    def test_instance_only_variant(self):
        cfg = di_config(attacker="prediction-shift", instance_only=True, trials=40)
        stats = run_deletion_inference(cfg)
        assert stats.estimate > 0.8


class TestReconstructionGame:
    def test_majority_on_singletons(self):
        cfg = GameConfig(
            learner=LearnerSpec.knn(k=1),
            data=DataSpec(kind="hypercube", n=8, d=10, label_mode="singleton"),
            attacker="majority", attacker_params=(("aux_size", 400),),
            game="reconstruction", trials=30, seed=7, metric="hamming", eps=1.0,
        )
        stats = run_reconstruction(cfg)
        assert stats.rho_at_eps > 0.85
        assert stats.mean_queries_before == 400

    def test_sentence_metric_reports_f1(self):
        cfg = GameConfig(
            learner=LearnerSpec.ngram(order=2), data=DataSpec(kind="corpus"),
            attacker="sentence", game="reconstruction", trials=10, seed=7, metric="f1",
        )
        stats = run_reconstruction(cfg)
        assert stats.f1_mean is not None and stats.f1_mean > 0.9
        assert len(stats.f1_scores) == 10

    def test_workers_do_not_change_reconstruction_results(self):
        cfg = GameConfig(
            learner=LearnerSpec.knn(k=1),
            data=DataSpec(kind="hypercube", n=8, d=10, label_mode="singleton"),
            attacker="majority", attacker_params=(("aux_size", 200),),
            game="reconstruction", trials=12, seed=7, metric="hamming", eps=1.0,
        )
        assert run_reconstruction(cfg).distances == run_reconstruction(cfg, workers=2).distances

    def test_no_signal_learner_scores_at_chance(self):
        cfg = GameConfig(
            learner=LearnerSpec.constant_classifier(n_classes=5),
            data=DataSpec(kind="hypercube", n=20, d=12, label_mode="classes", classes=5),
            attacker="majority", attacker_params=(("aux_size", 200),),
            game="reconstruction", trials=40, seed=8, metric="normalized-hamming",
        )
        stats = run_reconstruction(cfg)
        assert abs(stats.expected_accuracy - 0.5) < 0.08


class TestKnownInstanceGame:
    def test_lambda_zero_matches_before_model(self):
        cfg = GameConfig(
            learner=LearnerSpec.ols(), data=LINEAR, game="known-instance",
            trials=30, seed=9, lam=0.0,
        )
        stats = run_known_instance(cfg)
        for attacker_dist, baseline in stats.rows:
            assert attacker_dist >= baseline - 1e-12  # baseline takes the min side

    def test_noiseless_interpolation_regime(self):
        cfg = GameConfig(
            learner=LearnerSpec.ols(), data=DataSpec(kind="linear", n=40, d=3, noise=0.0),
            game="known-instance", trials=20, seed=9, lam=3.0,
        )
        stats = run_known_instance(cfg)
        assert stats.mean_attacker < 1e-8
        assert stats.mean_baseline < 1e-8

    def test_tuned_lambda_beats_baseline(self):
        cfg = GameConfig(
            learner=LearnerSpec.ols(), data=DataSpec(kind="linear", n=120, d=4, noise=0.2),
            game="known-instance", trials=60, seed=10, tune_trials=40,
        )
        stats = run_known_instance(cfg)
        assert stats.mean_attacker < stats.mean_baseline

    def test_workers_do_not_change_known_instance_results(self):
        cfg = GameConfig(
            learner=LearnerSpec.ols(), data=LINEAR, game="known-instance",
            trials=16, seed=10, lam=5.0,
        )
        assert run_known_instance(cfg).rows == run_known_instance(cfg, workers=2).rows


def test_oracle_phase_discipline_in_game():
    """An attacker returning to the before-oracle after switching must fail;
    the harness surfaces it rather than silently serving stale answers."""
    from unlearn_audit.core import PhaseClosedError
    import unlearn_audit.games as games

    def bad_attacker(c0, c1, before, after, rng, ctx):
        after.query(c0.x)
        before.query(c0.x)  # too late
        raise AssertionError("unreachable")

    cfg = di_config(trials=1)
    real = games._build_inference_attacker
    games._build_inference_attacker = lambda _cfg: bad_attacker
    try:
        with pytest.raises(PhaseClosedError):
            run_deletion_inference(cfg)
    finally:
        games._build_inference_attacker = real
