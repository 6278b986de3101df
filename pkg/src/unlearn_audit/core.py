"""Shared domain types: examples, datasets, predictions, losses, and the
query-counted oracle through which attackers access trained models."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator, Sequence, Union

import numpy as np

# Token sequences are tuples of integer ids; vector instances are 1-d float
# arrays (binary instances use values 0.0/1.0).
TokenSeq = tuple
Instance = Union[np.ndarray, TokenSeq]
Label = Union[float, int, None]

NLL_PROB_FLOOR = 1e-12


class AuditError(Exception):
    """Base class for all toolkit errors."""


class KindMismatchError(AuditError):
    """Instance kind does not match what the model or oracle expects."""


class PhaseClosedError(AuditError):
    """A query was sent to an oracle the game has already revoked."""


class IncompatibleKindsError(AuditError):
    """Loss kind cannot be evaluated on this prediction/label pair."""


class EmptyDatasetError(AuditError):
    """An operation that needs at least one example got none."""


class LossKind(Enum):
    SQUARED = "squared"
    ZERO_ONE = "zero_one"
    NLL = "nll"


@dataclass(frozen=True)
class ClassDistribution:
    """Confidence distribution over class labels, aligned with ``classes``."""

    classes: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) != len(self.classes):
            raise ValueError("probs must align with classes")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a distribution")
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        if not isinstance(other, ClassDistribution):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.classes, self.probs.tobytes()))

    def prob_of(self, label) -> float:
        for c, p in zip(self.classes, self.probs):
            if c == label:
                return float(p)
        return 0.0

    @property
    def top_label(self):
        """Most confident class; ties resolve to the earliest listed class."""
        return self.classes[int(np.argmax(self.probs))]


Prediction = Union[float, ClassDistribution]


@dataclass(frozen=True)
class Example:
    x: Instance
    y: Label = None

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return instances_equal(self.x, other.x) and self.y == other.y

    def __hash__(self):
        if isinstance(self.x, np.ndarray):
            return hash((self.x.tobytes(), self.y))
        return hash((self.x, self.y))


def instance_kind(x: Instance) -> str:
    if isinstance(x, np.ndarray):
        return "vector"
    if isinstance(x, tuple):
        return "tokens"
    raise KindMismatchError(f"not an instance: {type(x).__name__}")


def instances_equal(a: Instance, b: Instance) -> bool:
    if instance_kind(a) != instance_kind(b):
        return False
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and bool(np.all(a == b))
    return a == b


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise KindMismatchError("vector instances must be 1-d and nonempty")
    v.flags.writeable = False
    return v


class Dataset:
    """Ordered multiset of examples with stable indices.

    Index i names the same example until a deletion produces a new Dataset;
    duplicates are permitted.
    """

    def __init__(self, examples: Iterable[Example], provenance: str = ""):
        self.examples = tuple(examples)
        self.provenance = provenance
        if len(self.examples) < 1:
            raise EmptyDatasetError("dataset must hold at least one example")
        kinds = {instance_kind(e.x) for e in self.examples}
        if len(kinds) != 1:
            raise KindMismatchError("mixed instance kinds in one dataset")
        self.kind = kinds.pop()

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, i: int) -> Example:
        return self.examples[i]

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def feature_matrix(self) -> np.ndarray:
        if self.kind != "vector":
            raise KindMismatchError("feature_matrix needs vector instances")
        return np.stack([e.x for e in self.examples])

    def label_array(self) -> np.ndarray:
        return np.asarray([e.y for e in self.examples])

    def sentences(self) -> list:
        if self.kind != "tokens":
            raise KindMismatchError("sentences need token instances")
        return [e.x for e in self.examples]

    def without_indices(self, indices: Sequence[int]) -> "Dataset":
        drop = set(indices)
        kept = [e for i, e in enumerate(self.examples) if i not in drop]
        if not kept:
            raise EmptyDatasetError("deletion would empty the dataset")
        return Dataset(kept, provenance=self.provenance)


class Phase(Enum):
    BEFORE_DELETION = "before"
    AFTER_DELETION = "after"


class Oracle:
    """Query-counted, phase-tagged black-box handle to a trained model.

    Attackers never see model internals; every query bumps ``query_count``
    exactly once, and a closed oracle refuses further queries.
    """

    def __init__(self, model, phase: Phase, on_first_query: Callable[[], None] | None = None):
        self._model = model
        self.phase = phase
        self.query_count = 0
        self._closed = False
        self._on_first_query = on_first_query

    def _admit(self, n: int = 1) -> None:
        if self._closed:
            raise PhaseClosedError(f"{self.phase.value}-oracle has been revoked")
        if self.query_count == 0 and self._on_first_query is not None:
            hook, self._on_first_query = self._on_first_query, None
            hook()
        self.query_count += n

    def query(self, x: Instance) -> Prediction:
        self._admit()
        return self._model.predict(x)

    def query_batch(self, xs: Sequence[Instance]) -> list:
        """Predictions for many instances; counts len(xs) queries."""
        xs = list(xs)
        if not xs:
            return []
        self._admit(len(xs))
        return self._model.predict_batch(xs)

    def query_fragment(self, gram: TokenSeq, order: int | None = None) -> float:
        """Joint frequency of one n-gram fragment (language models only)."""
        self._admit()
        return self._model.fragment_probability(gram, order=order)

    def query_fragments(self, grams: Sequence[TokenSeq], order: int | None = None) -> np.ndarray:
        grams = list(grams)
        if not grams:
            return np.zeros(0)
        self._admit(len(grams))
        return self._model.fragment_probabilities(grams, order=order)

    def close(self) -> None:
        self._closed = True


def oracle_query(oracle: Oracle, x: Instance) -> Prediction:
    return oracle.query(x)


def evaluate_loss(kind: LossKind, prediction: Prediction, label: Label) -> float:
    """Pointwise loss; non-negative for all three kinds."""
    if kind is LossKind.SQUARED:
        if isinstance(prediction, ClassDistribution):
            raise IncompatibleKindsError("squared loss needs a real-valued prediction")
        return float(prediction - label) ** 2
    if kind is LossKind.ZERO_ONE:
        if not isinstance(prediction, ClassDistribution):
            raise IncompatibleKindsError("0-1 loss needs a class distribution")
        return 0.0 if prediction.top_label == label else 1.0
    if kind is LossKind.NLL:
        if not isinstance(prediction, ClassDistribution):
            raise IncompatibleKindsError("NLL needs a class distribution")
        return -float(np.log(max(prediction.prob_of(label), NLL_PROB_FLOOR)))
    raise IncompatibleKindsError(f"unknown loss kind {kind!r}")


def empirical_risk(model, dataset: Dataset, kind: LossKind) -> float:
    if len(dataset) == 0:
        raise EmptyDatasetError("empirical risk over an empty dataset")
    total = 0.0
    for e in dataset:
        total += evaluate_loss(kind, model.predict(e.x), e.y)
    return total / len(dataset)


def loss_increase(example: Example, before: Oracle, after: Oracle, kind: LossKind) -> float:
    """Loss after deletion minus loss before, measured through the oracles."""
    lb = evaluate_loss(kind, before.query(example.x), example.y)
    la = evaluate_loss(kind, after.query(example.x), example.y)
    return la - lb
