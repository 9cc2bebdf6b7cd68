"""Classification harness: PCA, LDA, a linear SVM, and the trial protocol.

The estimators follow the scikit-learn fit/transform/predict conventions
(get_params/set_params included via BaseEstimator) so they compose with
sklearn pipelines, but the numerics are implemented here: PCA by SVD with a
fixed sign rule, LDA with a ridge-regularized pooled covariance, and a
hinge-loss SVM trained by seeded stochastic subgradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.pipeline import make_pipeline
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class PCA(BaseEstimator, TransformerMixin):
    """Principal component analysis via SVD of the centered data matrix.

    Parameters
    ----------
    n_components : int or None
        Explicit component count (must not exceed the data rank), or None
        to keep the smallest count explaining ``variance_goal`` of the
        variance, capped at ``max_components``.
    """

    def __init__(self, n_components=None, variance_goal=0.95, max_components=50):
        self.n_components = n_components
        self.variance_goal = variance_goal
        self.max_components = max_components

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        u, s, vt = np.linalg.svd(centered, full_matrices=False)
        # deterministic orientation: each component's largest entry positive
        for row in vt:
            j = int(np.argmax(np.abs(row)))
            if row[j] < 0:
                row *= -1.0
        tol = max(X.shape) * np.finfo(np.float64).eps * (s[0] if len(s) else 0.0)
        rank = int(np.sum(s > tol))
        total = float(np.sum(s**2))
        ratios = s**2 / total if total > 0 else np.zeros_like(s)
        if self.n_components is not None:
            if self.n_components > rank:
                raise ValueError(
                    f"n_components={self.n_components} exceeds data rank {rank}"
                )
            n = self.n_components
        else:
            n = rank
            cum = np.cumsum(ratios)
            for i in range(rank):
                if cum[i] >= self.variance_goal - 1e-12:
                    n = i + 1
                    break
            n = min(n, self.max_components)
        self.components_ = vt[:n]
        self.singular_values_ = s[:n]
        self.explained_variance_ratio_ = ratios[:n]
        self.rank_ = rank
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        return np.asarray(Z) @ self.components_ + self.mean_


class LDA(BaseEstimator, ClassifierMixin):
    """Fisher discriminant with a ridge-regularized pooled covariance.

    The pooled within-class covariance is regularized by eps * I with
    eps = ridge * trace / dim; prediction takes the largest class score
    x . w_c - w_c . mu_c / 2 + log prior_c.
    """

    def __init__(self, ridge=1e-6):
        self.ridge = ridge

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes, counts = np.unique(y, return_counts=True)
        if len(classes) < 2:
            raise ValueError("LDA needs at least 2 classes")
        if counts.min() < 2:
            raise ValueError("LDA needs at least 2 samples per class")
        n, d = X.shape
        means = np.vstack([X[y == c].mean(axis=0) for c in classes])
        scatter = np.zeros((d, d))
        for c, mu in zip(classes, means):
            centered = X[y == c] - mu
            scatter += centered.T @ centered
        cov = scatter / (n - len(classes))
        eps = self.ridge * np.trace(cov) / d
        if eps == 0.0:
            eps = self.ridge
        cov_reg = cov + eps * np.eye(d)
        self.classes_ = classes
        self.coef_ = np.linalg.solve(cov_reg, means.T).T
        self.intercept_ = -0.5 * np.sum(means * self.coef_, axis=1) + np.log(counts / n)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class LinearSVM(BaseEstimator, ClassifierMixin):
    """Linear soft-margin SVM trained by seeded stochastic subgradient
    descent on the hinge loss (Pegasos-style steps, one-vs-rest)."""

    def __init__(self, lam=1e-4, epochs=20, seed=0):
        self.lam = lam
        self.epochs = epochs
        self.seed = seed

    def _fit_binary(self, X, target, rng):
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        t = 0
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.lam * t)
                if target[i] * (X[i] @ w + b) < 1.0:
                    w = (1.0 - eta * self.lam) * w + eta * target[i] * X[i]
                    b += eta * target[i]
                else:
                    w = (1.0 - eta * self.lam) * w
        return w, b

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if len(classes) < 2:
            raise ValueError("SVM needs at least 2 classes")
        rng = np.random.default_rng(self.seed)
        weights = []
        biases = []
        for c in classes:
            target = np.where(y == c, 1.0, -1.0)
            w, b = self._fit_binary(X, target, rng)
            weights.append(w)
            biases.append(b)
        self.classes_ = classes
        self.coef_ = np.vstack(weights)
        self.intercept_ = np.array(biases)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_.T + self.intercept_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


METHOD_TAGS = ("L", "PL", "PS")


def make_model(method: str, pca_components: int | None = None):
    """Build the L / PL / PS model for a table cell (LDA, PCA+LDA, PCA+SVM)."""
    if method == "L":
        return LDA()
    if method == "PL":
        return make_pipeline(PCA(n_components=pca_components), LDA())
    if method == "PS":
        return make_pipeline(PCA(n_components=pca_components), LinearSVM())
    raise ValueError(f"unknown method {method!r}, expected one of {METHOD_TAGS}")


@dataclass
class TrialProtocol:
    """Subsampled trial protocol, or an official train/test evaluation when
    test features are passed to run_trials."""

    method: str = "PL"
    trials: int = 100
    train_fraction: float = 0.8
    seed: int = 0
    n_per_class: int | None = None
    pca_components: int | None = None


@dataclass
class TrialReport:
    method: str
    homology: str
    mean_accuracy: float
    trials: int
    per_trial: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "homology": self.homology,
            "mean_accuracy": self.mean_accuracy,
            "trials": self.trials,
            "per_trial": self.per_trial,
        }


def _accuracy(model, X, y) -> float:
    return float(np.mean(model.predict(X) == y))


def run_trials(
    features_by_class: dict[int, np.ndarray],
    protocol: TrialProtocol,
    test_features_by_class: dict[int, np.ndarray] | None = None,
    homology: str = "",
) -> TrialReport:
    """Repeated stratified split-and-score, deterministic given the seed.

    Within each class the first ``n_per_class`` rows are kept (order of
    appearance), then rows are put in a canonical lexicographic order so the
    report depends only on the multiset of features, not on input order.
    With ``test_features_by_class`` given, a single official train/test
    evaluation is run instead.
    """
    if not features_by_class:
        raise ValueError("need at least one class")
    prepared = {}
    for label, rows in features_by_class.items():
        rows = np.asarray(rows, dtype=np.float64)
        if protocol.n_per_class is not None:
            if rows.shape[0] < protocol.n_per_class:
                raise ValueError(
                    f"class {label} has {rows.shape[0]} samples, "
                    f"need {protocol.n_per_class}"
                )
            rows = rows[: protocol.n_per_class]
        prepared[label] = rows[np.lexsort(rows.T[::-1])]

    if test_features_by_class is not None:
        train_x = np.vstack([prepared[c] for c in sorted(prepared)])
        train_y = np.concatenate([np.full(len(prepared[c]), c) for c in sorted(prepared)])
        test_x = np.vstack([test_features_by_class[c] for c in sorted(test_features_by_class)])
        test_y = np.concatenate(
            [np.full(len(test_features_by_class[c]), c) for c in sorted(test_features_by_class)]
        )
        model = make_model(protocol.method, protocol.pca_components)
        model.fit(train_x, train_y)
        acc = _accuracy(model, test_x, test_y)
        return TrialReport(protocol.method, homology, acc, 1, [acc])

    accuracies = []
    for trial in range(protocol.trials):
        rng = np.random.default_rng(np.random.SeedSequence((protocol.seed, trial)))
        train_parts, test_parts = [], []
        train_labels, test_labels = [], []
        for label in sorted(prepared):
            rows = prepared[label]
            perm = rng.permutation(len(rows))
            n_train = int(round(protocol.train_fraction * len(rows)))
            n_train = min(max(n_train, 1), len(rows) - 1)
            train_parts.append(rows[perm[:n_train]])
            test_parts.append(rows[perm[n_train:]])
            train_labels.append(np.full(n_train, label))
            test_labels.append(np.full(len(rows) - n_train, label))
        model = make_model(protocol.method, protocol.pca_components)
        model.fit(np.vstack(train_parts), np.concatenate(train_labels))
        accuracies.append(_accuracy(model, np.vstack(test_parts), np.concatenate(test_labels)))
    return TrialReport(
        protocol.method,
        homology,
        float(np.mean(accuracies)),
        protocol.trials,
        [float(a) for a in accuracies],
    )
