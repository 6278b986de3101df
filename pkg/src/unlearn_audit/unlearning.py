"""Ideal deletion: retraining from scratch on the dataset minus the targets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import Dataset
from .learners import LearnerSpec, Model, train


@dataclass(frozen=True)
class DeletionRequest:
    targets: tuple

    def __init__(self, targets: Sequence[int]):
        targets = tuple(int(t) for t in targets)
        if len(targets) < 1:
            raise ValueError("a deletion request names at least one index")
        if len(set(targets)) != len(targets):
            raise ValueError("deletion targets must be distinct")
        object.__setattr__(self, "targets", targets)


def delete_examples(
    spec: LearnerSpec, dataset: Dataset, request: DeletionRequest, seed=None
) -> tuple[Dataset, Model]:
    """Remove the requested examples and retrain from scratch.

    The seed is expected to be freshly derived by the caller; the returned
    model is exactly what training on the reduced dataset produces.
    """
    n = len(dataset)
    for t in request.targets:
        if not 0 <= t < n:
            raise IndexError(f"deletion target {t} out of range for size {n}")
    remaining = dataset.without_indices(request.targets)
    return remaining, train(spec, remaining, seed)
