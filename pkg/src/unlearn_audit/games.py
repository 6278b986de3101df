"""Executable security games: deletion inference, deletion reconstruction,
and known-instance label reconstruction, with trial orchestration and
scoring.

Per-trial randomness derives from (master seed, trial index) by path-labeled
splitting, so identical configs reproduce identical statistics regardless of
worker count.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .attacks.inference import (
    GuessBit,
    fair_coin,
    loss_increase_attack,
    loss_threshold_membership,
    membership_loss_confidence,
    membership_reduction_attack,
    prediction_shift_attack,
    reconstruction_to_inference,
)
from .attacks.metrics import METRICS
from .attacks.reconstruction import (
    confidence_drop_label,
    disagreement_majority,
    extrapolated_label,
    tune_extrapolation,
)
from .attacks.sentences import (
    SearchBudgetExceededError,
    bag_of_words,
    decreased_ngram_graph,
    search_covering_path,
)
from .core import Example, LossKind, Oracle, Phase
from .data import DataSpec
from .learners import LearnerSpec, train
from .seeding import child_int, child_rng, child_seed
from .unlearning import DeletionRequest, delete_examples


class ConfigInvalidError(Exception):
    """A game configuration failed validation; message names the field."""


@dataclass(frozen=True)
class TrialContext:
    """Per-trial facts an attacker may rely on: the seed of the trial's
    dataset draw, so attacker-side sampling targets the same distribution
    (e.g. the same hidden regression weights)."""

    data_seed: object = None


LOSS_BY_NAME = {k.value: k for k in LossKind}


@dataclass(frozen=True)
class GameConfig:
    """Everything one game run depends on, seed included."""

    learner: LearnerSpec
    data: DataSpec
    game: str = "deletion-inference"
    attacker: str = "loss-increase"
    attacker_params: tuple = ()  # sorted (key, value) pairs
    trials: int = 1000
    seed: int = 0
    loss: str = "squared"
    metric: str = "exact"
    eps: float = 0.0
    instance_only: bool = False
    label_only: bool = False
    deletion_hiding: bool = False
    batch_size: int = 1
    lam: float | None = None
    tune_grid: tuple = ()
    tune_trials: int = 100

    def params(self) -> dict:
        return dict(self.attacker_params)

    def with_params(self, **kv) -> "GameConfig":
        merged = {**self.params(), **kv}
        return replace(self, attacker_params=tuple(sorted(merged.items())))

    @property
    def loss_kind(self) -> LossKind:
        return LOSS_BY_NAME[self.loss]


def validate_config(cfg: GameConfig) -> None:
    if cfg.game not in ("deletion-inference", "reconstruction", "known-instance"):
        raise ConfigInvalidError(f"game: unknown game {cfg.game!r}")
    if cfg.trials < 1:
        raise ConfigInvalidError("trials: must be at least 1")
    if cfg.loss not in LOSS_BY_NAME:
        raise ConfigInvalidError(f"loss: unknown loss {cfg.loss!r}")
    if cfg.metric not in METRICS and cfg.metric != "f1":
        raise ConfigInvalidError(f"metric: unknown metric {cfg.metric!r}")
    if cfg.instance_only and cfg.label_only:
        raise ConfigInvalidError("variant: instance_only and label_only are exclusive")
    if cfg.batch_size < 1:
        raise ConfigInvalidError("batch_size: must be at least 1")
    if cfg.game == "known-instance" and cfg.learner.task != "regression":
        raise ConfigInvalidError("learner: known-instance games need a regression learner")
    if cfg.game == "deletion-inference":
        kind = _inference_attacker_kind(cfg)
        if cfg.instance_only and kind == "example":
            raise ConfigInvalidError("attacker: needs labels but instance_only is set")
        if cfg.label_only and kind in ("example", "instance"):
            raise ConfigInvalidError("attacker: needs instances but label_only is set")


# -------------------------------------------------------------------------
# scoring helpers


def wilson_interval(wins: int, trials: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= wins <= trials:
        raise ValueError("need 0 <= wins <= trials, trials >= 1")
    p = wins / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    # the interval touches the boundary exactly at 0 or n wins
    low = 0.0 if wins == 0 else max(0.0, center - half)
    high = 1.0 if wins == trials else min(1.0, center + half)
    return low, high


def multiset_f1(a, b) -> float:
    """F1 over token multisets; 1 exactly when the multisets coincide."""
    ca, cb = Counter(a), Counter(b)
    if not ca and not cb:
        return 1.0
    overlap = sum((ca & cb).values())
    return 2.0 * overlap / (sum(ca.values()) + sum(cb.values()))


@dataclass(frozen=True)
class SuccessStats:
    wins: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    ties: int = 0
    collisions: int = 0
    mean_queries_before: float = 0.0
    mean_queries_after: float = 0.0
    trial_wins: tuple = ()

    def __post_init__(self):
        if not 0 <= self.wins <= self.trials:
            raise ValueError("wins must lie in [0, trials]")
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValueError("confidence interval must bracket the estimate")


def _success_stats(outcomes, ties, collisions, qb, qa) -> SuccessStats:
    wins = int(sum(outcomes))
    trials = len(outcomes)
    low, high = wilson_interval(wins, trials)
    return SuccessStats(
        wins=wins,
        trials=trials,
        estimate=wins / trials,
        ci_low=low,
        ci_high=high,
        ties=ties,
        collisions=collisions,
        mean_queries_before=qb / trials,
        mean_queries_after=qa / trials,
        trial_wins=tuple(int(o) for o in outcomes),
    )


@dataclass(frozen=True)
class RecStats:
    distances: tuple
    eps: float
    rho_at_eps: float
    exact_match: float
    expected_accuracy: float | None = None
    f1_mean: float | None = None
    f1_scores: tuple = ()
    mean_queries_before: float = 0.0
    mean_queries_after: float = 0.0

    def __post_init__(self):
        for rate in (self.rho_at_eps, self.exact_match):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


@dataclass(frozen=True)
class KnownInstanceStats:
    rows: tuple  # (attacker_distance, baseline_distance) per trial
    lam: float
    mean_attacker: float = field(init=False)
    mean_baseline: float = field(init=False)

    def __post_init__(self):
        att = float(np.mean([r[0] for r in self.rows]))
        base = float(np.mean([r[1] for r in self.rows]))
        object.__setattr__(self, "mean_attacker", att)
        object.__setattr__(self, "mean_baseline", base)


# -------------------------------------------------------------------------
# attacker registry


def _default_shift_metric(cfg: GameConfig):
    if cfg.learner.task == "regression":
        return METRICS["abs"]
    return METRICS["l1-confidence"]


def _probe_box(aux_instances, rng, count):
    """Uniform probes over the per-feature bounding box of the attacker's
    auxiliary sample."""
    stacked = np.stack(aux_instances)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    return [lo + (hi - lo) * rng.uniform(size=len(lo)) for _ in range(count)]


def _inference_attacker_kind(cfg: GameConfig) -> str:
    table = {
        "loss-increase": "example",
        "prediction-shift": "instance",
        "membership-reduction": "example",
        "label-match": "label",
        "always-zero": "any",
        "always-one": "any",
        "coin": "any",
    }
    if cfg.attacker == "reconstruction-inference":
        return cfg.params().get("challenge", "instance")
    if cfg.attacker not in table:
        raise ConfigInvalidError(f"attacker: unknown inference attacker {cfg.attacker!r}")
    return table[cfg.attacker]


def _build_inference_attacker(cfg: GameConfig) -> Callable:
    p = cfg.params()
    name = cfg.attacker
    if name == "loss-increase":
        def attack(c0, c1, before, after, rng, ctx):
            return loss_increase_attack(c0, c1, before, after, cfg.loss_kind, rng)
        return attack
    if name == "prediction-shift":
        metric = METRICS[p["metric"]] if "metric" in p else _default_shift_metric(cfg)
        def attack(c0, c1, before, after, rng, ctx):
            return prediction_shift_attack(c0, c1, before, after, metric, rng)
        return attack
    if name == "membership-reduction":
        mode = p.get("mode", "bit")
        holdout = int(p.get("holdout", 50))
        if mode == "bit":
            def attack(c0, c1, before, after, rng, ctx):
                aux = cfg.data.sample_examples(
                    holdout, int(rng.integers(2**31)), anchor=ctx.data_seed
                )
                losses = sorted(
                    membership_loss_confidence(e, after, cfg.loss_kind) for e in aux
                )
                tau = -float(np.median(losses))  # median holdout loss
                def mi_bit(e, oracle):
                    return loss_threshold_membership(e, oracle, tau, cfg.loss_kind)
                return membership_reduction_attack(c0, c1, before, after, rng, mi_bit=mi_bit)
            return attack
        if mode == "confidence":
            def attack(c0, c1, before, after, rng, ctx):
                def mi_conf(e, oracle):
                    return membership_loss_confidence(e, oracle, cfg.loss_kind)
                return membership_reduction_attack(
                    c0, c1, before, after, rng, mi_confidence=mi_conf
                )
            return attack
        raise ConfigInvalidError(f"attacker: unknown membership mode {mode!r}")
    if name == "label-match":
        probes = int(p.get("probes", 200))
        aux_size = int(p.get("aux_size", max(len_hint(cfg), 50)))
        def attack(y0, y1, before, after, rng, ctx):
            aux = cfg.data.sample_examples(
                aux_size, int(rng.integers(2**31)), anchor=ctx.data_seed
            )
            probe_xs = _probe_box([e.x for e in aux], rng, probes)
            labels = sorted({e.y for e in aux})
            recovered = confidence_drop_label(before, after, probe_xs, labels)
            if recovered == y0 and recovered != y1:
                return GuessBit(0)
            if recovered == y1 and recovered != y0:
                return GuessBit(1)
            return fair_coin(rng)
        return attack
    if name == "reconstruction-inference":
        inner_cfg = cfg if "rec" in p else cfg.with_params(rec="majority")
        rec = _build_reconstruction_attacker(inner_cfg)
        metric = METRICS[cfg.metric]
        eps = cfg.eps
        def attack(c0, c1, before, after, rng, ctx):
            return reconstruction_to_inference(
                lambda b, a, r: rec(b, a, r, ctx), metric, eps, c0, c1, before, after, rng
            )
        return attack
    if name == "always-zero":
        return lambda c0, c1, before, after, rng, ctx: GuessBit(0)
    if name == "always-one":
        return lambda c0, c1, before, after, rng, ctx: GuessBit(1)
    if name == "coin":
        return lambda c0, c1, before, after, rng, ctx: fair_coin(rng)
    raise ConfigInvalidError(f"attacker: unknown inference attacker {name!r}")


def len_hint(cfg: GameConfig) -> int:
    return cfg.data.n


def _build_reconstruction_attacker(cfg: GameConfig) -> Callable:
    p = cfg.params()
    name = p.get("rec", cfg.attacker)
    if name == "majority":
        aux_size = int(p.get("aux_size", 2000))
        oracles_used = p.get("oracles", "both")
        def rec(before, after, rng, ctx):
            aux = cfg.data.sample_instances(
                aux_size, int(rng.integers(2**31)), anchor=ctx.data_seed
            )
            if oracles_used == "before":
                return disagreement_majority(before, before, aux).instance
            if oracles_used == "after":
                return disagreement_majority(after, after, aux).instance
            return disagreement_majority(before, after, aux).instance
        return rec
    if name == "sentence":
        order = cfg.learner.order
        rule = p.get("rule", "median-ratio")
        tau = float(p.get("tau", 1e-9))
        max_repeats = int(p.get("max_repeats", 2))
        enum_limit = int(p.get("full_enumeration_limit", 200_000))
        budget = int(p.get("query_budget", 30_000_000))
        token_ids = cfg.data.dictionary().token_ids
        def rec(before, after, rng, ctx):
            graph = decreased_ngram_graph(
                before, after, token_ids, order,
                tau=tau, rule=rule,
                full_enumeration_limit=enum_limit, query_budget=budget,
                repeat_budget=max_repeats,
            )
            try:
                sentence = search_covering_path(graph, max_repeats=max_repeats)
            except SearchBudgetExceededError:
                sentence = None
            if sentence is None:
                return bag_of_words(graph)
            return sentence
        return rec
    if name == "label-drop":
        probes = int(p.get("probes", 200))
        aux_size = int(p.get("aux_size", max(cfg.data.n, 50)))
        def rec(before, after, rng, ctx):
            aux = cfg.data.sample_examples(
                aux_size, int(rng.integers(2**31)), anchor=ctx.data_seed
            )
            probe_xs = _probe_box([e.x for e in aux], rng, probes)
            labels = sorted({e.y for e in aux})
            return confidence_drop_label(before, after, probe_xs, labels)
        return rec
    raise ConfigInvalidError(f"attacker: unknown reconstruction attacker {name!r}")


# -------------------------------------------------------------------------
# deletion inference


def _project_challenge(example: Example, kind: str):
    if kind in ("example", "any"):
        return example
    if kind == "instance":
        return example.x
    if kind == "label":
        return example.y
    raise ConfigInvalidError(f"attacker: unknown challenge kind {kind!r}")


def _paired_oracles(h, h_del):
    before = Oracle(h, Phase.BEFORE_DELETION)
    after = Oracle(h_del, Phase.AFTER_DELETION, on_first_query=before.close)
    return before, after


def _di_trial_range(cfg: GameConfig, start: int, stop: int):
    attacker = _build_inference_attacker(cfg)
    kind = _inference_attacker_kind(cfg)
    outcomes, ties, collisions = [], 0, 0
    qb = qa = 0
    k = cfg.batch_size
    for t in range(start, stop):
        data_seed = child_seed(cfg.seed, "data", t)
        dataset = cfg.data.sample(data_seed)
        ctx = TrialContext(data_seed=data_seed)
        n = len(dataset)
        if 2 * k > n:
            raise ConfigInvalidError("batch_size: dataset too small for batch + references")
        rng = child_rng(cfg.seed, "game", t)
        perm = rng.permutation(n)
        deleted_idx = [int(i) for i in perm[:k]]
        reference_idx = [int(i) for i in perm[k : 2 * k]]
        h = train(cfg.learner, dataset, child_seed(cfg.seed, "train", t))
        _, h_del = delete_examples(
            cfg.learner, dataset, DeletionRequest(deleted_idx), child_seed(cfg.seed, "del", t)
        )
        pair_no = 0
        for di in deleted_idx:
            for ri in reference_idx:
                if cfg.deletion_hiding:
                    fresh = cfg.data.sample_examples(
                        1, child_seed(cfg.seed, "fresh", t, pair_no), anchor=data_seed
                    )[0]
                    if fresh == dataset[di]:
                        collisions += 1
                    other = fresh
                else:
                    other = dataset[ri]
                b = int(rng.integers(2))
                pair = [None, None]
                pair[b] = _project_challenge(dataset[di], kind)
                pair[1 - b] = _project_challenge(other, kind)
                before, after = _paired_oracles(h, h_del)
                guess = attacker(
                    pair[0], pair[1], before, after,
                    child_rng(cfg.seed, "attack", t, pair_no), ctx,
                )
                outcomes.append(1 if guess.value == b else 0)
                ties += 1 if guess.tie_broken else 0
                qb += before.query_count
                qa += after.query_count
                pair_no += 1
    return outcomes, ties, collisions, qb, qa


def _merge_ranges(parts):
    outcomes, ties, collisions, qb, qa = [], 0, 0, 0, 0
    for o, t, c, b, a in parts:
        outcomes.extend(o)
        ties += t
        collisions += c
        qb += b
        qa += a
    return outcomes, ties, collisions, qb, qa


def _range_chunks(trials: int, workers: int):
    size = max(1, math.ceil(trials / workers))
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def run_deletion_inference(cfg: GameConfig, workers: int = 1) -> SuccessStats:
    """Play the deletion-inference game cfg.trials times and score wins.

    With batch_size k > 1, each trial deletes a batch of k and scores the
    attacker on all k*k (deleted, retained) pairs, each with a fresh
    challenge bit and fresh oracle pair over the same two models.
    """
    validate_config(cfg)
    if cfg.game != "deletion-inference":
        raise ConfigInvalidError(f"game: expected deletion-inference, got {cfg.game!r}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(_di_range_star, [(cfg, s, e) for s, e in _range_chunks(cfg.trials, workers)])
            )
    else:
        parts = [_di_trial_range(cfg, 0, cfg.trials)]
    return _success_stats(*_merge_ranges(parts))


def _di_range_star(args):
    return _di_trial_range(*args)


# -------------------------------------------------------------------------
# reconstruction


def _rec_trial_range(cfg: GameConfig, start: int, stop: int):
    rec = _build_reconstruction_attacker(cfg)
    sentence_game = cfg.metric == "f1"
    metric = None if sentence_game else METRICS[cfg.metric]
    rows = []
    qb = qa = 0
    for t in range(start, stop):
        data_seed = child_seed(cfg.seed, "data", t)
        dataset = cfg.data.sample(data_seed)
        ctx = TrialContext(data_seed=data_seed)
        rng = child_rng(cfg.seed, "game", t)
        i = int(rng.integers(len(dataset)))
        target = dataset[i]
        h = train(cfg.learner, dataset, child_seed(cfg.seed, "train", t))
        _, h_del = delete_examples(
            cfg.learner, dataset, DeletionRequest([i]), child_seed(cfg.seed, "del", t)
        )
        before, after = _paired_oracles(h, h_del)
        guess = rec(before, after, child_rng(cfg.seed, "attack", t), ctx)
        if sentence_game:
            f1 = multiset_f1(target.x, guess)
            rows.append((1.0 - f1, 1.0 if tuple(guess) == tuple(target.x) else 0.0, f1))
        else:
            ref = target.y if cfg.attacker == "label-drop" else target.x
            dist = metric(ref, guess)
            rows.append((dist, 1.0 if dist == 0.0 else 0.0, None))
        qb += before.query_count
        qa += after.query_count
    return rows, qb, qa


def _rec_range_star(args):
    return _rec_trial_range(*args)


def run_reconstruction(cfg: GameConfig, workers: int = 1) -> RecStats:
    """Play the deletion-reconstruction game and report the distance
    distribution, the success rate at radius eps, and sequence F1 where
    applicable."""
    validate_config(cfg)
    if cfg.game != "reconstruction":
        raise ConfigInvalidError(f"game: expected reconstruction, got {cfg.game!r}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(_rec_range_star, [(cfg, s, e) for s, e in _range_chunks(cfg.trials, workers)])
            )
    else:
        parts = [_rec_trial_range(cfg, 0, cfg.trials)]
    rows, qb, qa = [], 0, 0
    for r, b, a in parts:
        rows.extend(r)
        qb += b
        qa += a
    distances = tuple(r[0] for r in rows)
    exact = float(np.mean([r[1] for r in rows]))
    sentence_game = cfg.metric == "f1"
    bounded = sentence_game or METRICS[cfg.metric].bounded
    f1s = tuple(r[2] for r in rows) if sentence_game else ()
    return RecStats(
        distances=distances,
        eps=cfg.eps,
        rho_at_eps=float(np.mean([d <= cfg.eps for d in distances])),
        exact_match=exact,
        expected_accuracy=(1.0 - float(np.mean(distances))) if bounded else None,
        f1_mean=float(np.mean(f1s)) if sentence_game else None,
        f1_scores=f1s,
        mean_queries_before=qb / len(rows),
        mean_queries_after=qa / len(rows),
    )


# -------------------------------------------------------------------------
# known-instance label reconstruction


def _ki_trial_range(cfg: GameConfig, lam: float, start: int, stop: int):
    rows = []
    for t in range(start, stop):
        dataset = cfg.data.sample(child_seed(cfg.seed, "data", t))
        rng = child_rng(cfg.seed, "game", t)
        i = int(rng.integers(len(dataset)))
        target = dataset[i]
        h = train(cfg.learner, dataset, child_seed(cfg.seed, "train", t))
        _, h_del = delete_examples(
            cfg.learner, dataset, DeletionRequest([i]), child_seed(cfg.seed, "del", t)
        )
        before, after = _paired_oracles(h, h_del)
        y_tilde = extrapolated_label(target.x, before, after, lam)
        attacker_dist = abs(y_tilde - target.y)
        baseline = min(
            abs(h.predict(target.x) - target.y), abs(h_del.predict(target.x) - target.y)
        )
        rows.append((float(attacker_dist), float(baseline)))
    return rows


def _ki_range_star(args):
    return _ki_trial_range(*args)


def run_known_instance(cfg: GameConfig, workers: int = 1) -> KnownInstanceStats:
    """Known-instance game: reveal the deleted instance, extrapolate its
    label from the two models, and compare with the better of the two
    direct predictions."""
    validate_config(cfg)
    if cfg.game != "known-instance":
        raise ConfigInvalidError(f"game: expected known-instance, got {cfg.game!r}")
    if cfg.lam is not None:
        lam = float(cfg.lam)
    else:
        grid = cfg.tune_grid or tuple(float(v) for v in range(0, 41))
        lam = tune_extrapolation(
            cfg.learner, cfg.data, grid, cfg.tune_trials, child_int(cfg.seed, "tune")
        )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _ki_range_star,
                    [(cfg, lam, s, e) for s, e in _range_chunks(cfg.trials, workers)],
                )
            )
    else:
        parts = [_ki_trial_range(cfg, lam, 0, cfg.trials)]
    rows = [row for part in parts for row in part]
    return KnownInstanceStats(rows=tuple(rows), lam=lam)
