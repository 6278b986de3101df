"""Reconstruction adversaries: recover the deleted instance or label."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Oracle
from ..learners import train
from ..seeding import child_seed
from ..unlearning import DeletionRequest, delete_examples


@dataclass(frozen=True)
class MajorityReconstruction:
    instance: np.ndarray
    empty_disagreement: bool = False


def disagreement_majority(before: Oracle, after: Oracle, aux) -> MajorityReconstruction:
    """Reconstruct a deleted binary instance from a nearest-neighbor style
    classifier: the auxiliary points whose predicted label flipped across the
    deletion lie in the vanished cell, and their coordinate-wise majority
    approximates its center.

    Uses exactly len(aux) queries per oracle. Per-coordinate ties resolve
    to 0; an empty disagreement set yields all zeros plus a flag.
    """
    aux = list(aux)
    if not aux:
        raise ValueError("auxiliary instance set must be nonempty")
    d = len(aux[0])
    labels_before = [p.top_label for p in before.query_batch(aux)]
    labels_after = [p.top_label for p in after.query_batch(aux)]
    flipped = [x for x, lb, la in zip(aux, labels_before, labels_after) if lb != la]
    if not flipped:
        out = np.zeros(d)
        out.flags.writeable = False
        return MajorityReconstruction(out, empty_disagreement=True)
    stacked = np.stack(flipped)
    ones = stacked.sum(axis=0)
    out = (2 * ones > len(flipped)).astype(float)
    out.flags.writeable = False
    return MajorityReconstruction(out)


def confidence_drop_label(before: Oracle, after: Oracle, probes, labels) -> int:
    """Reconstruct the deleted label: the class whose total confidence mass
    over the probes dropped the most. Ties go to the smallest class."""
    probes = list(probes)
    if not probes:
        raise ValueError("probe set must be nonempty")
    labels = sorted(labels)
    preds_before = before.query_batch(probes)
    preds_after = after.query_batch(probes)
    change = np.zeros(len(labels))
    for pb, pa in zip(preds_before, preds_after):
        for i, c in enumerate(labels):
            change[i] += pa.prob_of(c) - pb.prob_of(c)
    return labels[int(np.argmin(change))]


def extrapolated_label(x, before: Oracle, after: Oracle, lam: float) -> float:
    """Known-instance label estimate: push the pre-deletion prediction
    further along the direction the deletion moved it away from."""
    y_hat = before.query(x)
    y_hat_del = after.query(x)
    return float(y_hat + lam * (y_hat - y_hat_del))


def tune_extrapolation(spec, data_spec, grid, trials: int, seed: int) -> float:
    """Pick the extrapolation strength on attacker-side data.

    Simulates the known-instance game ``trials`` times on datasets the
    attacker samples itself and returns the grid value minimizing the mean
    absolute error; ties go to the smallest candidate.
    """
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    totals = np.zeros(len(grid))
    for t in range(trials):
        dataset = data_spec.sample(child_seed(seed, "tune-data", t))
        rng = np.random.default_rng(child_seed(seed, "tune-pick", t))
        i = int(rng.integers(len(dataset)))
        target = dataset[i]
        model = train(spec, dataset, child_seed(seed, "tune-train", t))
        _, model_del = delete_examples(
            spec, dataset, DeletionRequest([i]), child_seed(seed, "tune-del", t)
        )
        y_hat = model.predict(target.x)
        y_hat_del = model_del.predict(target.x)
        for gi, lam in enumerate(grid):
            totals[gi] += abs(y_hat + lam * (y_hat - y_hat_del) - target.y)
    return grid[int(np.argmin(totals))]
