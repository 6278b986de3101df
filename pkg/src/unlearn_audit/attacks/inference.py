"""Deletion-inference adversaries.

Each attack sees two candidate challenges, queries the model before and
after the unlearning update through oracles, and guesses which candidate was
deleted. Query order matters: the before-oracle is spent first, and touching
the after-oracle revokes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Example, LossKind, Oracle, evaluate_loss


@dataclass(frozen=True)
class GuessBit:
    value: int
    tie_broken: bool = False

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("a guess is a single bit")


def fair_coin(rng: np.random.Generator) -> GuessBit:
    return GuessBit(int(rng.integers(2)), tie_broken=True)


def loss_increase_attack(
    e0: Example,
    e1: Example,
    before: Oracle,
    after: Oracle,
    loss: LossKind,
    rng: np.random.Generator,
) -> GuessBit:
    """Guess the candidate whose loss grew more across the deletion.

    Four queries total. Only the sign of the loss-increase difference
    matters, so any positive rescaling of the loss leaves the guess
    unchanged; an exact tie falls back to a fair coin.
    """
    pb0 = before.query(e0.x)
    pb1 = before.query(e1.x)
    pa0 = after.query(e0.x)
    pa1 = after.query(e1.x)
    d0 = evaluate_loss(loss, pa0, e0.y) - evaluate_loss(loss, pb0, e0.y)
    d1 = evaluate_loss(loss, pa1, e1.y) - evaluate_loss(loss, pb1, e1.y)
    if d0 > d1:
        return GuessBit(0)
    if d0 < d1:
        return GuessBit(1)
    return fair_coin(rng)


def prediction_shift_attack(
    x0,
    x1,
    before: Oracle,
    after: Oracle,
    metric: Callable,
    rng: np.random.Generator,
) -> GuessBit:
    """Label-free variant: guess the instance whose prediction moved more.

    ``metric`` compares two predictions (absolute difference for regression,
    L1 over confidence vectors for classifiers).
    """
    pb0 = before.query(x0)
    pb1 = before.query(x1)
    pa0 = after.query(x0)
    pa1 = after.query(x1)
    shift = metric(pb0, pa0) - metric(pb1, pa1)
    if shift > 0:
        return GuessBit(0)
    if shift < 0:
        return GuessBit(1)
    return fair_coin(rng)


def loss_threshold_membership(
    example: Example, oracle: Oracle, tau: float, loss: LossKind
) -> int:
    """Baseline membership test: member iff the example's loss is at most
    ``tau``. Stands in for heavier learned membership attacks."""
    return int(evaluate_loss(loss, oracle.query(example.x), example.y) <= tau)


def membership_loss_confidence(example: Example, oracle: Oracle, loss: LossKind) -> float:
    """Membership confidence for the threshold test: negated loss, so higher
    means more member-like regardless of the threshold."""
    return -evaluate_loss(loss, oracle.query(example.x), example.y)


def membership_reduction_attack(
    e0: Example,
    e1: Example,
    before: Oracle,
    after: Oracle,
    rng: np.random.Generator,
    mi_bit: Callable | None = None,
    mi_confidence: Callable | None = None,
) -> GuessBit:
    """Deletion inference built black-box on a membership-inference test.

    Bit mode calls ``mi_bit(example, oracle)`` on the after-model only: the
    candidate judged a non-member there is the deleted one, with a coin flip
    when the two membership bits agree. Confidence mode compares how much
    ``mi_confidence(example, oracle)`` dropped across deletion and picks the
    candidate that dropped more.
    """
    if (mi_bit is None) == (mi_confidence is None):
        raise ValueError("provide exactly one of mi_bit or mi_confidence")
    if mi_bit is not None:
        b0 = mi_bit(e0, after)
        b1 = mi_bit(e1, after)
        if (b0, b1) == (0, 1):
            return GuessBit(0)
        if (b0, b1) == (1, 0):
            return GuessBit(1)
        return fair_coin(rng)
    cb0 = mi_confidence(e0, before)
    cb1 = mi_confidence(e1, before)
    c0 = mi_confidence(e0, after) - cb0
    c1 = mi_confidence(e1, after) - cb1
    if c0 < c1:
        return GuessBit(0)
    if c0 > c1:
        return GuessBit(1)
    return fair_coin(rng)


def reconstruction_to_inference(
    rec: Callable,
    metric: Callable,
    eps: float,
    c0,
    c1,
    before: Oracle,
    after: Oracle,
    rng: np.random.Generator,
) -> GuessBit:
    """Turn any reconstruction attack into a deletion-inference attack:
    reconstruct, then pick whichever challenge lies within ``eps`` of the
    reconstruction (candidate 0 checked first), else flip a coin."""
    guess = rec(before, after, rng)
    if metric(c0, guess) <= eps:
        return GuessBit(0)
    if metric(c1, guess) <= eps:
        return GuessBit(1)
    return fair_coin(rng)
