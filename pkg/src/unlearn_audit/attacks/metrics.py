"""Distance metrics the attacks and games are parameterized by."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ClassDistribution, Example, instances_equal


def abs_diff(a: float, b: float) -> float:
    return abs(float(a) - float(b))


def l1_confidence(p: ClassDistribution, q: ClassDistribution) -> float:
    """L1 distance between confidence distributions, aligned on the union
    of their class sets. Bounded by 2; reduces to 2|dp| for two classes."""
    labels = sorted(set(p.classes) | set(q.classes))
    return float(sum(abs(p.prob_of(c) - q.prob_of(c)) for c in labels))


def hamming(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("hamming distance needs equal-length vectors")
    return float(np.sum(a != b))


def normalized_hamming(a: np.ndarray, b: np.ndarray) -> float:
    return hamming(a, b) / len(np.asarray(a))


def zero_one_exact(a, b) -> float:
    """1 unless the two values are exactly equal (examples, instances,
    labels, or token sequences)."""
    if isinstance(a, Example) or isinstance(b, Example):
        return 0.0 if a == b else 1.0
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return 0.0 if instances_equal(np.asarray(a), np.asarray(b)) else 1.0
    return 0.0 if a == b else 1.0


@dataclass(frozen=True)
class DistanceMetric:
    name: str
    fn: Callable
    bounded: bool  # values guaranteed inside [0, 1]

    def __call__(self, a, b) -> float:
        return self.fn(a, b)


METRICS = {
    "abs": DistanceMetric("abs", abs_diff, bounded=False),
    "l1-confidence": DistanceMetric("l1-confidence", l1_confidence, bounded=False),
    "hamming": DistanceMetric("hamming", hamming, bounded=False),
    "normalized-hamming": DistanceMetric("normalized-hamming", normalized_hamming, bounded=True),
    "exact": DistanceMetric("exact", zero_one_exact, bounded=True),
}
