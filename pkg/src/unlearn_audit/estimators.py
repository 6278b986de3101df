"""From-scratch learners behind a scikit-learn style estimator API.

Every estimator here is a deterministic function of its training data:
fitting the same data twice yields bit-identical parameters. That property
is what makes retraining-based deletion well defined, so none of these wrap
library implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin


def check_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("X must be a nonempty 2-d array")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    return X


def check_X_y(X, y, classification: bool = False):
    X = check_matrix(X)
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != len(X):
        raise ValueError("y must be 1-d and aligned with X")
    if classification:
        y = y.astype(int)
    else:
        y = y.astype(float)
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite values")
    return X, y


def fitted_attr(estimator, name: str):
    if not hasattr(estimator, name):
        raise RuntimeError(f"{type(estimator).__name__} is not fitted")
    return getattr(estimator, name)


class LeastSquaresRegressor(BaseEstimator, RegressorMixin):
    """Ordinary least squares via a rank-revealing solve.

    Uses the minimum-norm solution, so rank-deficient designs (tiny datasets
    after deletions) fit without error.
    """

    def __init__(self, fit_intercept: bool = True):
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        A = np.hstack([X, np.ones((len(X), 1))]) if self.fit_intercept else X
        w, *_ = np.linalg.lstsq(A, y, rcond=None)
        if self.fit_intercept:
            self.coef_, self.intercept_ = w[:-1], float(w[-1])
        else:
            self.coef_, self.intercept_ = w, 0.0
        return self

    def predict(self, X):
        X = check_matrix(X)
        return X @ fitted_attr(self, "coef_") + self.intercept_


class RidgeRegressor(BaseEstimator, RegressorMixin):
    """L2-penalized least squares; the intercept is not penalized."""

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def fit(self, X, y):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        X, y = check_X_y(X, y)
        x_mean, y_mean = X.mean(axis=0), y.mean()
        Xc, yc = X - x_mean, y - y_mean
        d = X.shape[1]
        self.coef_ = np.linalg.solve(Xc.T @ Xc + self.alpha * np.eye(d), Xc.T @ yc)
        self.intercept_ = float(y_mean - x_mean @ self.coef_)
        return self

    def predict(self, X):
        X = check_matrix(X)
        return X @ fitted_attr(self, "coef_") + self.intercept_


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


class LassoRegressor(BaseEstimator, RegressorMixin):
    """L1-penalized least squares by cyclic coordinate descent.

    Minimizes (1/2n)||y - Xw - b||^2 + alpha*||w||_1 with an unpenalized
    intercept. Stops when no coordinate moves more than ``tol`` in one sweep;
    ``converged_`` records whether that happened within ``max_sweeps``.
    """

    def __init__(self, alpha: float = 0.1, tol: float = 1e-8, max_sweeps: int = 10_000):
        self.alpha = alpha
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        X, y = check_X_y(X, y)
        n, d = X.shape
        w = np.zeros(d)
        b = float(y.mean())
        r = y - b  # running residual y - b - Xw
        col_sq = (X * X).sum(axis=0) / n
        self.converged_ = False
        for sweep in range(self.max_sweeps):
            delta = 0.0
            for j in range(d):
                if col_sq[j] == 0.0:
                    continue
                rho = (X[:, j] @ r) / n + col_sq[j] * w[j]
                new_wj = soft_threshold(rho, self.alpha) / col_sq[j]
                step = new_wj - w[j]
                if step != 0.0:
                    r -= step * X[:, j]
                    w[j] = new_wj
                    delta = max(delta, abs(step))
            shift = r.mean()
            if shift != 0.0:
                b += shift
                r -= shift
                delta = max(delta, abs(shift))
            if delta <= self.tol:
                self.converged_ = True
                break
        self.n_sweeps_ = sweep + 1
        self.coef_, self.intercept_ = w, b
        return self

    def predict(self, X):
        X = check_matrix(X)
        return X @ fitted_attr(self, "coef_") + self.intercept_

    def kkt_violation(self, X, y) -> float:
        """Largest violation of the subgradient optimality conditions."""
        X, y = check_X_y(X, y)
        g = X.T @ (y - self.predict(X)) / len(X)
        worst = abs(float((y - self.predict(X)).mean()))
        for j, wj in enumerate(self.coef_):
            if wj != 0.0:
                worst = max(worst, abs(g[j] - np.sign(wj) * self.alpha))
            else:
                worst = max(worst, max(0.0, abs(g[j]) - self.alpha))
        return worst


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class LogisticClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression fit by full-batch gradient descent
    with backtracking line search.

    A small L2 term keeps the objective strongly convex, so the minimizer is
    unique and retraining after a deletion is seed-independent. ``converged_``
    is False when the gradient-norm tolerance was not reached in ``max_iter``
    steps; the best iterate is kept either way.
    """

    def __init__(self, l2: float = 1e-3, tol: float = 1e-6, max_iter: int = 5000):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def _probs(self, W, Xa):
        return _softmax(Xa @ W)

    def _objective(self, W, P, Y):
        logp = np.log(np.clip((P * Y).sum(axis=1), 1e-300, None))
        pen = W[:-1, :]  # intercept row unpenalized
        return -logp.mean() + 0.5 * self.l2 * float((pen * pen).sum())

    def _gradient(self, W, Xa, P, Y, n):
        grad = Xa.T @ (P - Y) / n
        grad[:-1, :] += self.l2 * W[:-1, :]
        return grad

    def fit(self, X, y):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        X, y = check_X_y(X, y, classification=True)
        self.classes_ = np.unique(y)
        n, d = X.shape
        c = len(self.classes_)
        Xa = np.hstack([X, np.ones((n, 1))])
        Y = np.zeros((n, c))
        Y[np.arange(n), np.searchsorted(self.classes_, y)] = 1.0
        W = np.zeros((d + 1, c))
        step = 1.0
        P = self._probs(W, Xa)
        obj = self._objective(W, P, Y)
        grad = self._gradient(W, Xa, P, Y, n)
        self.converged_ = False
        self.n_iter_ = 0
        for _ in range(self.max_iter):
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= self.tol:
                self.converged_ = True
                break
            # backtracking with Armijo condition, then mild step growth
            while True:
                W_next = W - step * grad
                P_next = self._probs(W_next, Xa)
                obj_next = self._objective(W_next, P_next, Y)
                if obj_next <= obj - 0.5 * step * gnorm * gnorm or step < 1e-12:
                    break
                step *= 0.5
            W, P, obj = W_next, P_next, obj_next
            grad = self._gradient(W, Xa, P, Y, n)
            step *= 1.25
            self.n_iter_ += 1
        self.coef_ = W[:-1, :]
        self.intercept_ = W[-1, :]
        return self

    def decision_function(self, X):
        X = check_matrix(X)
        return X @ fitted_attr(self, "coef_") + self.intercept_

    def predict_proba(self, X):
        return _softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def gradient_norm(self, X, y) -> float:
        X, y = check_X_y(X, y, classification=True)
        n = len(X)
        Xa = np.hstack([X, np.ones((n, 1))])
        Y = np.zeros((n, len(self.classes_)))
        Y[np.arange(n), np.searchsorted(self.classes_, y)] = 1.0
        W = np.vstack([self.coef_, self.intercept_])
        grad = self._gradient(W, Xa, self._probs(W, Xa), Y, n)
        return float(np.linalg.norm(grad))


class KNearestNeighbors(BaseEstimator, ClassifierMixin):
    """k-nearest-neighbor classifier with vote-fraction confidences.

    Distance ties are broken toward the smallest stored index (stable sort),
    so 1-NN predictions are unambiguous even on exact midpoints.
    """

    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        X, y = check_X_y(X, y, classification=True)
        self.X_ = X.copy()
        self.y_ = y.copy()
        self.classes_ = np.unique(y)
        return self

    def _neighbor_indices(self, X):
        train = fitted_attr(self, "X_")
        d2 = ((X[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
        k = min(self.k, len(train))
        return np.argsort(d2, axis=1, kind="stable")[:, :k]

    def predict_proba(self, X):
        X = check_matrix(X)
        idx = self._neighbor_indices(X)
        votes = self.y_[idx]
        out = np.zeros((len(X), len(self.classes_)))
        for ci, c in enumerate(self.classes_):
            out[:, ci] = (votes == c).mean(axis=1)
        return out

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    dist: np.ndarray | None = None  # leaf class distribution

    @property
    def is_leaf(self) -> bool:
        return self.dist is not None


def gini_impurity(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


class GiniDecisionTree(BaseEstimator, ClassifierMixin):
    """CART-style classification tree: binary splits on Gini impurity,
    no depth limit, midpoint thresholds.

    Among equally good splits the lowest feature index wins, then the lowest
    threshold. An impure node is split even at zero impurity gain whenever a
    valid split exists, so datasets with distinct instances are always fit to
    zero training error.

    Leaf confidences are Laplace-smoothed (C4.5 style): a leaf holding m
    examples, m_c of class c, reports (m_c + a) / (m + a*K). The leaf
    majority always stays the argmax, so hard predictions match plain CART;
    only the confidence channel additionally reflects how much training
    support backs the leaf.
    """

    def __init__(self, leaf_smoothing: float = 1.0):
        self.leaf_smoothing = leaf_smoothing

    def fit(self, X, y):
        if self.leaf_smoothing < 0:
            raise ValueError("leaf_smoothing must be non-negative")
        X, y = check_X_y(X, y, classification=True)
        self.classes_ = np.unique(y)
        y_idx = np.searchsorted(self.classes_, y)
        self.n_nodes_ = 0
        self.root_ = self._build(X, y_idx)
        return self

    def _leaf(self, y_idx) -> _TreeNode:
        counts = np.bincount(y_idx, minlength=len(self.classes_)).astype(float)
        counts += self.leaf_smoothing
        return _TreeNode(dist=counts / counts.sum())

    def _best_split(self, X, y_idx):
        n, d = X.shape
        c = len(self.classes_)
        onehot = np.zeros((n, c))
        onehot[np.arange(n), y_idx] = 1.0
        total = onehot.sum(axis=0)
        best = None  # (weighted_impurity, feature, threshold)
        for j in range(d):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            cum = np.cumsum(onehot[order], axis=0)
            cut = np.nonzero(xs[:-1] < xs[1:])[0]
            if cut.size == 0:
                continue
            n_left = (cut + 1).astype(float)
            n_right = n - n_left
            lc = cum[cut]
            rc = total - lc
            g_left = 1.0 - (lc * lc).sum(axis=1) / (n_left * n_left)
            g_right = 1.0 - (rc * rc).sum(axis=1) / (n_right * n_right)
            weighted = (n_left * g_left + n_right * g_right) / n
            i = int(np.argmin(weighted))  # first minimum: lowest threshold
            if best is None or weighted[i] < best[0] - 1e-12:
                thr = (xs[cut[i]] + xs[cut[i] + 1]) / 2.0
                best = (float(weighted[i]), j, float(thr))
        return best

    def _build(self, X, y_idx) -> _TreeNode:
        self.n_nodes_ += 1
        if len(np.unique(y_idx)) <= 1:
            return self._leaf(y_idx)
        split = self._best_split(X, y_idx)
        if split is None:  # duplicate instances with conflicting labels
            return self._leaf(y_idx)
        _, j, thr = split
        mask = X[:, j] <= thr
        node = _TreeNode(feature=j, threshold=thr)
        node.left = self._build(X[mask], y_idx[mask])
        node.right = self._build(X[~mask], y_idx[~mask])
        return node

    def predict_proba(self, X):
        X = check_matrix(X)
        root = fitted_attr(self, "root_")
        out = np.empty((len(X), len(self.classes_)))
        for i, row in enumerate(X):
            node = root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.dist
        return out

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class ConstantRegressor(BaseEstimator, RegressorMixin):
    """Ignores its training data entirely; predicts a fixed value."""

    def __init__(self, value: float = 0.0):
        self.value = value

    def fit(self, X, y):
        check_X_y(X, y)
        return self

    def predict(self, X):
        X = check_matrix(X)
        return np.full(len(X), float(self.value))


class ConstantClassifier(BaseEstimator, ClassifierMixin):
    """Ignores its training data; reports a uniform class distribution."""

    def __init__(self, n_classes: int = 2):
        self.n_classes = n_classes

    def fit(self, X, y):
        check_X_y(X, y, classification=True)
        self.classes_ = np.arange(self.n_classes)
        return self

    def predict_proba(self, X):
        X = check_matrix(X)
        return np.full((len(X), self.n_classes), 1.0 / self.n_classes)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
