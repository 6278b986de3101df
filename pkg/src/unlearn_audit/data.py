"""Dataset ingestion and the synthetic generators the games draw from.

All generators are pure functions of their parameters and a seed, so a
DataSpec embedded in a report is enough to regenerate the exact run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import AuditError, Dataset, Example, as_vector
from .ngram import END_ID, END_WORD, START_ID, START_WORD


class ParseError(AuditError):
    """A data file could not be parsed; carries the offending line number."""


class SchemaMismatchError(AuditError):
    pass


class NonNumericFeatureError(AuditError):
    pass


class EmptyCorpusError(AuditError):
    pass


class InfeasibleSingletonError(AuditError):
    """More singleton instances requested than the hypercube holds."""


@dataclass(frozen=True)
class Dictionary:
    """Word/id table for corpora; ids 0 and 1 are the boundary tokens."""

    words: tuple

    def __post_init__(self):
        if self.words[:2] != (START_WORD, END_WORD):
            raise ValueError("dictionary must start with the boundary tokens")

    def __len__(self) -> int:
        return len(self.words)

    def word(self, token_id: int) -> str:
        return self.words[token_id]

    def id_of(self, word: str) -> int:
        return self.words.index(word)

    @property
    def token_ids(self) -> tuple:
        return tuple(range(len(self.words)))

    @property
    def word_ids(self) -> tuple:
        """Ids of real words, boundary tokens excluded."""
        return tuple(range(2, len(self.words)))


@dataclass(frozen=True)
class CsvSchema:
    label_column: str
    label_kind: str = "class"  # "class" | "real"

    def __post_init__(self):
        if self.label_kind not in ("class", "real"):
            raise SchemaMismatchError(f"unknown label kind {self.label_kind!r}")


@dataclass
class CsvLoadResult:
    dataset: Dataset
    feature_names: tuple
    mins: np.ndarray
    ranges: np.ndarray
    class_names: tuple  # empty for regression

    def denormalize(self, X: np.ndarray) -> np.ndarray:
        return X * self.ranges + self.mins


def load_csv(path, schema: CsvSchema) -> CsvLoadResult:
    """Parse a headed CSV, min-max normalize features to [0, 1] per column,
    and map class labels to dense indices in first-appearance order.

    Constant columns normalize to all zeros; the recorded constants undo the
    normalization exactly.
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if schema.label_column not in header:
        raise SchemaMismatchError(
            f"label column {schema.label_column!r} not in header {header}"
        )
    label_idx = header.index(schema.label_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)

    raw_features, raw_labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        feats = []
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            try:
                feats.append(float(cell))
            except ValueError:
                raise NonNumericFeatureError(
                    f"{path}:{lineno}: non-numeric feature {cell!r} in column {header[i]!r}"
                ) from None
        raw_features.append(feats)
        raw_labels.append(row[label_idx].strip())
    if not raw_features:
        raise ParseError(f"{path}: no data rows")

    X = np.asarray(raw_features, dtype=float)
    mins = X.min(axis=0)
    ranges = X.max(axis=0) - mins
    safe = np.where(ranges == 0.0, 1.0, ranges)
    Xn = (X - mins) / safe

    class_names: tuple = ()
    if schema.label_kind == "class":
        order: dict = {}
        for lab in raw_labels:
            order.setdefault(lab, len(order))
        class_names = tuple(order)
        ys = [order[lab] for lab in raw_labels]
    else:
        try:
            ys = [float(lab) for lab in raw_labels]
        except ValueError as exc:
            raise SchemaMismatchError(f"{path}: non-numeric regression label: {exc}") from None

    examples = [Example(as_vector(x), y) for x, y in zip(Xn, ys)]
    dataset = Dataset(examples, provenance=f"csv:{path}")
    return CsvLoadResult(dataset, feature_names, mins, ranges, class_names)


def gen_uniform_hypercube(n, d, label_mode="singleton", classes=2, seed=0) -> Dataset:
    """Binary instances uniform on {0,1}^d.

    Singleton mode resamples collisions so instances are distinct and labels
    them 1..n uniquely; class mode draws labels uniformly over ``classes``.
    """
    rng = np.random.default_rng(seed)
    if label_mode == "singleton":
        if n > 2**d:
            raise InfeasibleSingletonError(f"cannot place {n} distinct points in 2^{d}")
        seen = set()
        points = []
        while len(points) < n:
            x = rng.integers(0, 2, size=d)
            key = tuple(x)
            if key in seen:
                continue
            seen.add(key)
            points.append(x.astype(float))
        labels = list(range(1, n + 1))
    elif label_mode == "classes":
        points = [rng.integers(0, 2, size=d).astype(float) for _ in range(n)]
        labels = [int(c) for c in rng.integers(0, classes, size=n)]
    else:
        raise ValueError(f"unknown label mode {label_mode!r}")
    examples = [Example(as_vector(x), y) for x, y in zip(points, labels)]
    return Dataset(examples, provenance=f"hypercube:{label_mode}")


def gen_linear_regression(n, d, noise_sigma=0.1, seed=0, weights_from=None) -> Dataset:
    """y = <w, x> + Gaussian noise with a hidden weight vector drawn once
    per seed; x uniform in [0, 1]^d.

    ``weights_from`` reuses another seed's hidden weights, so fresh examples
    (attacker auxiliary data, deletion-hiding challenges) come from the same
    regression problem as an already-sampled dataset.
    """
    rng = np.random.default_rng(seed)
    if weights_from is None:
        w = rng.standard_normal(d)
    else:
        w = np.random.default_rng(weights_from).standard_normal(d)
        rng.standard_normal(d)  # keep the x/noise stream position fixed
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = X @ w + noise_sigma * rng.standard_normal(n)
    examples = [Example(as_vector(x), float(v)) for x, v in zip(X, y)]
    return Dataset(examples, provenance="linear")


def gen_blobs(n, d, classes=3, spread=0.3, seed=0) -> Dataset:
    """Isotropic Gaussian class blobs with centers on the unit simplex
    vertices; class counts balanced up to the remainder."""
    if classes < 2:
        raise ValueError("blobs need at least two classes")
    if classes > d:
        raise ValueError("blob centers need classes <= d")
    rng = np.random.default_rng(seed)
    counts = [n // classes + (1 if i < n % classes else 0) for i in range(classes)]
    rows, labels = [], []
    for c, count in enumerate(counts):
        center = np.zeros(d)
        center[c] = 1.0
        rows.append(center + spread * rng.standard_normal((count, d)))
        labels.extend([c] * count)
    X = np.vstack(rows)
    labels = np.asarray(labels)
    order = rng.permutation(n)
    examples = [Example(as_vector(x), int(y)) for x, y in zip(X[order], labels[order])]
    return Dataset(examples, provenance="blobs")


def load_corpus(path) -> tuple[Dataset, Dictionary]:
    """One sentence per line; lowercased, whitespace-tokenized."""
    words = [START_WORD, END_WORD]
    ids = {START_WORD: START_ID, END_WORD: END_ID}
    sentences = []
    with open(path) as f:
        for line in f:
            toks = line.lower().split()
            if not toks:
                continue
            seq = []
            for w in toks:
                if w not in ids:
                    ids[w] = len(words)
                    words.append(w)
                seq.append(ids[w])
            sentences.append(tuple(seq))
    if not sentences:
        raise EmptyCorpusError(f"{path}: no sentences")
    examples = [Example(s, None) for s in sentences]
    return Dataset(examples, provenance=f"corpus:{path}"), Dictionary(tuple(words))


def bundled_corpus_path() -> str:
    return str(resources.files("unlearn_audit").joinpath("assets/corpus.txt"))


@dataclass(frozen=True)
class DataSpec:
    """Config-resolvable dataset distribution: kind plus parameters.

    ``sample(seed)`` draws one dataset; ``sample_examples`` draws fresh
    examples from the same distribution for attacker-side auxiliary data.
    """

    kind: str  # "linear" | "blobs" | "hypercube" | "csv" | "corpus"
    n: int = 100
    d: int = 2
    noise: float = 0.1
    classes: int = 3
    spread: float = 0.3
    label_mode: str = "singleton"
    path: str = ""
    label_column: str = "label"
    label_kind: str = "class"

    def __post_init__(self):
        if self.kind not in ("linear", "blobs", "hypercube", "csv", "corpus"):
            raise ValueError(f"unknown data kind {self.kind!r}")

    @property
    def instance_kind(self) -> str:
        return "tokens" if self.kind == "corpus" else "vector"

    def _resolved_path(self) -> str:
        if self.kind == "corpus" and not self.path:
            return bundled_corpus_path()
        return self.path

    def sample(self, seed) -> Dataset:
        if self.kind == "linear":
            return gen_linear_regression(self.n, self.d, self.noise, seed)
        if self.kind == "blobs":
            return gen_blobs(self.n, self.d, self.classes, self.spread, seed)
        if self.kind == "hypercube":
            return gen_uniform_hypercube(self.n, self.d, self.label_mode, self.classes, seed)
        if self.kind == "csv":
            return load_csv(self._resolved_path(), CsvSchema(self.label_column, self.label_kind)).dataset
        return load_corpus(self._resolved_path())[0]

    def sample_examples(self, m, seed, anchor=None) -> list:
        """Fresh examples from the same distribution.

        ``anchor`` names the seed of an already-sampled dataset whose hidden
        structure (the linear generator's weight vector) the fresh examples
        must share; generators without hidden structure ignore it.
        """
        if self.kind == "linear":
            return list(
                gen_linear_regression(m, self.d, self.noise, seed, weights_from=anchor).examples
            )
        if self.kind == "blobs":
            return list(gen_blobs(max(m, self.classes), self.d, self.classes, self.spread, seed).examples[:m])
        if self.kind == "hypercube":
            rng = np.random.default_rng(seed)
            return [
                Example(as_vector(rng.integers(0, 2, size=self.d).astype(float)), None)
                for _ in range(m)
            ]
        raise ValueError(f"cannot sample fresh examples from {self.kind!r} data")

    def sample_instances(self, m, seed, anchor=None) -> list:
        return [e.x for e in self.sample_examples(m, seed, anchor=anchor)]

    def dictionary(self) -> Dictionary:
        if self.kind != "corpus":
            raise ValueError("only corpus data has a dictionary")
        return load_corpus(self._resolved_path())[1]
