"""Learner specifications and the train/predict dispatch over them.

A (spec, dataset, seed) triple fully determines a model: every learner here
is deterministic, so retraining on the same data reproduces the same model
bit for bit. The seed argument exists for interface uniformity and for any
future randomized learner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import (
    ClassDistribution,
    Dataset,
    Instance,
    KindMismatchError,
    Prediction,
    instance_kind,
)
from .estimators import (
    ConstantClassifier,
    ConstantRegressor,
    GiniDecisionTree,
    KNearestNeighbors,
    LassoRegressor,
    LeastSquaresRegressor,
    LogisticClassifier,
    RidgeRegressor,
)
from .ngram import NGramModel

REGRESSION_KINDS = ("ols", "ridge", "lasso", "constant-regressor")
CLASSIFIER_KINDS = ("logistic", "knn", "tree", "constant-classifier")
LANGUAGE_KINDS = ("ngram",)
ALL_KINDS = REGRESSION_KINDS + CLASSIFIER_KINDS + LANGUAGE_KINDS


@dataclass(frozen=True)
class LearnerSpec:
    """Learner kind plus hyperparameters; training is pure given a seed."""

    kind: str
    alpha: float = 0.1          # ridge / lasso penalty
    k: int = 5                  # knn neighbors
    order: int = 2              # ngram order
    max_iter: int = 5000        # logistic
    tol: float = 1e-6           # logistic gradient-norm tolerance
    l2: float = 1e-3            # logistic ridge term
    value: float = 0.0          # constant regressor output
    n_classes: int = 2          # constant classifier width

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.kind in ("ridge", "lasso") and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "knn" and self.k < 1:
            raise ValueError("k must be at least 1")
        if self.kind == "ngram" and self.order not in (1, 2, 3):
            raise ValueError("ngram order must be 1, 2, or 3")

    @property
    def task(self) -> str:
        if self.kind in REGRESSION_KINDS:
            return "regression"
        if self.kind in CLASSIFIER_KINDS:
            return "classification"
        return "language"

    @property
    def instance_kind(self) -> str:
        return "tokens" if self.kind == "ngram" else "vector"

    @classmethod
    def ols(cls):
        return cls(kind="ols")

    @classmethod
    def ridge(cls, alpha: float = 1.0):
        return cls(kind="ridge", alpha=alpha)

    @classmethod
    def lasso(cls, alpha: float = 0.1):
        return cls(kind="lasso", alpha=alpha)

    @classmethod
    def logistic(cls, l2: float = 1e-3, tol: float = 1e-6, max_iter: int = 5000):
        return cls(kind="logistic", l2=l2, tol=tol, max_iter=max_iter)

    @classmethod
    def knn(cls, k: int = 5):
        return cls(kind="knn", k=k)

    @classmethod
    def tree(cls):
        return cls(kind="tree")

    @classmethod
    def ngram(cls, order: int = 2):
        return cls(kind="ngram", order=order)

    @classmethod
    def constant_regressor(cls, value: float = 0.0):
        return cls(kind="constant-regressor", value=value)

    @classmethod
    def constant_classifier(cls, n_classes: int = 2):
        return cls(kind="constant-classifier", n_classes=n_classes)


class Model:
    """Opaque trained predictor. Holds its own copy of anything it needs,
    so games can mutate or discard their datasets freely."""

    def __init__(self, spec: LearnerSpec, impl: Any):
        self.spec = spec
        self.impl = impl

    @property
    def task(self) -> str:
        return self.spec.task

    def predict(self, x: Instance) -> Prediction:
        kind = instance_kind(x)
        if kind != self.spec.instance_kind:
            raise KindMismatchError(
                f"{self.spec.kind} model cannot predict on {kind} instances"
            )
        if self.task == "language":
            return float(self.impl.sentence_probability(x))
        row = np.asarray(x, dtype=float)[None, :]
        if self.task == "regression":
            return float(self.impl.predict(row)[0])
        probs = self.impl.predict_proba(row)[0]
        return ClassDistribution(tuple(int(c) for c in self.impl.classes_), probs)

    def predict_batch(self, xs) -> list:
        kinds = {instance_kind(x) for x in xs}
        if kinds - {self.spec.instance_kind}:
            raise KindMismatchError("batch contains mismatched instance kinds")
        if self.task == "language":
            return [float(self.impl.sentence_probability(x)) for x in xs]
        X = np.stack([np.asarray(x, dtype=float) for x in xs])
        if self.task == "regression":
            return [float(v) for v in self.impl.predict(X)]
        probs = self.impl.predict_proba(X)
        classes = tuple(int(c) for c in self.impl.classes_)
        return [ClassDistribution(classes, p) for p in probs]

    def fragment_probability(self, gram, order: int | None = None) -> float:
        if self.task != "language":
            raise KindMismatchError("fragment queries need a language model")
        return self.impl.fragment_probability(gram, order=order)

    def fragment_probabilities(self, grams, order: int | None = None) -> np.ndarray:
        if self.task != "language":
            raise KindMismatchError("fragment queries need a language model")
        return self.impl.fragment_probabilities(grams, order=order)


def _make_estimator(spec: LearnerSpec):
    if spec.kind == "ols":
        return LeastSquaresRegressor()
    if spec.kind == "ridge":
        return RidgeRegressor(alpha=spec.alpha)
    if spec.kind == "lasso":
        return LassoRegressor(alpha=spec.alpha)
    if spec.kind == "logistic":
        return LogisticClassifier(l2=spec.l2, tol=spec.tol, max_iter=spec.max_iter)
    if spec.kind == "knn":
        return KNearestNeighbors(k=spec.k)
    if spec.kind == "tree":
        return GiniDecisionTree()
    if spec.kind == "constant-regressor":
        return ConstantRegressor(value=spec.value)
    if spec.kind == "constant-classifier":
        return ConstantClassifier(n_classes=spec.n_classes)
    raise ValueError(f"unknown learner kind {spec.kind!r}")


def train(spec: LearnerSpec, dataset: Dataset, seed=None) -> Model:
    """Fit the learner named by ``spec`` on ``dataset``."""
    if dataset.kind != spec.instance_kind:
        raise KindMismatchError(
            f"{spec.kind} needs {spec.instance_kind} datasets, got {dataset.kind}"
        )
    if spec.kind == "ngram":
        impl = NGramModel(order=spec.order).fit(dataset.sentences())
    else:
        X = dataset.feature_matrix()
        y = dataset.label_array()
        impl = _make_estimator(spec).fit(X, y)
    return Model(spec, impl)


def predict(model: Model, x: Instance) -> Prediction:
    return model.predict(x)


def sequence_probability(model: Model, seq, fragment: bool = False) -> float:
    """Probability a language model assigns: chain-rule for full sentences,
    joint frequency for fragments of length exactly the model order."""
    if model.task != "language":
        raise KindMismatchError("sequence probability needs a language model")
    if fragment:
        return model.fragment_probability(tuple(seq))
    return float(model.impl.sentence_probability(tuple(seq)))
