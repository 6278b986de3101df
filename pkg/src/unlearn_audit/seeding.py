"""Replayable seed derivation.

Every random decision in a run descends from one master seed through a
string-labeled path, so retraining after a deletion uses fresh randomness
while whole experiments stay reproducible and order-independent across
workers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _path_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def child_seed(master: int, *path) -> np.random.SeedSequence:
    """Seed for the random stream named by ``path`` under ``master``."""
    entropy = [int(master)] + [_path_entropy(p) for p in path]
    return np.random.SeedSequence(entropy)


def child_rng(master: int, *path) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, *path))


def child_int(master: int, *path) -> int:
    """Small-int seed derived from a labeled path, for APIs taking ints."""
    return int(child_rng(master, *path).integers(2**31))
