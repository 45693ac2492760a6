"""Full-batch gradient-descent softmax regression and evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..core import DegenerateLabels, OracleFailure

ACCURACY = "accuracy"
AUC = "auc"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.5
    l2: float = 0.0
    metric: str = ACCURACY


@dataclass(frozen=True)
class Classifier:
    coef: np.ndarray  # (n_features, n_classes)
    intercept: np.ndarray  # (n_classes,)

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def predict_proba(self, X):
        return _softmax(self.decision_function(X))

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fit_logreg(X, y, n_classes: int | None = None, epochs: int = 300, learning_rate: float = 0.5, l2: float = 0.0) -> Classifier:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    n, d = X.shape
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    for epoch in range(epochs):
        P = _softmax(X @ W + b)
        G = (P - Y) / n
        W -= learning_rate * (X.T @ G + l2 * W)
        b -= learning_rate * G.sum(axis=0)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise OracleFailure(f"logistic regression diverged at epoch {epoch}")
    P = _softmax(X @ W + b)
    loss = -np.mean(np.log(np.clip(P[np.arange(n), y], 1e-300, None)))
    if not np.isfinite(loss):
        raise OracleFailure("non-finite training loss")
    return Classifier(W, b)


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def binary_auc(y_true, scores) -> float:
    """Mann-Whitney AUC with mid-ranks for ties."""
    y_true = np.asarray(y_true).astype(bool)
    n_pos, n_neg = y_true.sum(), (~y_true).sum()
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs both classes present")
    ranks = rankdata(scores)
    return float((ranks[y_true].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc(y_true, proba) -> float:
    """Binary AUC, or macro one-vs-rest AUC over the classes present."""
    y_true = np.asarray(y_true)
    proba = np.asarray(proba)
    if proba.ndim == 1:
        return binary_auc(y_true, proba)
    if proba.shape[1] == 2:
        return binary_auc(y_true == 1, proba[:, 1])
    present = [k for k in np.unique(y_true) if k < proba.shape[1]]
    return float(np.mean([binary_auc(y_true == k, proba[:, k]) for k in present]))


def score(clf: Classifier, X, y, metric: str) -> float:
    if metric == AUC:
        return auc(y, clf.predict_proba(X))
    return accuracy(y, clf.predict(X))


def train_and_score(X_train, y_train, X_test, y_test, config: TrainConfig, n_classes: int | None = None):
    if len(np.unique(y_train)) < 2:
        raise DegenerateLabels("training split has a single class")
    if len(np.unique(y_test)) < 2:
        raise DegenerateLabels("test split has a single class")
    if n_classes is None:
        n_classes = int(max(y_train.max(), y_test.max())) + 1
    clf = fit_logreg(X_train, y_train, n_classes, config.epochs, config.learning_rate, config.l2)
    return clf, score(clf, X_test, y_test, config.metric)
