"""Cross-validation plumbing, an L2 logistic classifier and binary metrics."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from molftp.leakage import FoldSpec

log = logging.getLogger(__name__)

METRICS = ("auroc", "auprc", "precision", "recall", "f1", "accuracy")


@dataclass
class CvPlan:
    k: int
    seed: int
    folds: list[FoldSpec]


def stratified_folds(labels: Sequence[int], k: int, seed: int = 0) -> CvPlan:
    """Shuffle each class with ``seed`` and deal molecules round-robin into ``k`` folds.

    The dealing position carries over from one class to the next, so fold
    class counts stay within one of each other. ``k == N`` is leave-one-out.
    """
    y = np.asarray(labels)
    n = len(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    classes = np.unique(y)
    if k != n:
        for cls in classes:
            if (y == cls).sum() < k:
                raise ValueError(f"class {cls} has fewer than k={k} members")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=np.int64)
    pos = 0
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        assign[idx] = (pos + np.arange(len(idx))) % k
        pos = (pos + len(idx)) % k
    all_ids = frozenset(range(n))
    folds = []
    for f in range(k):
        test = frozenset(np.flatnonzero(assign == f).tolist())
        folds.append(FoldSpec(f, all_ids - test, test))
    return CvPlan(k, seed, folds)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    l2: float
    converged: bool
    mean: np.ndarray
    scale: np.ndarray
    constant: float | None = None  # set for single-class training data

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.constant is not None:
            return np.full(len(x), self.constant)
        z = (np.asarray(x, float) - self.mean) / self.scale
        return expit(z @ self.weights + self.bias)


def fit_logistic(
    x: np.ndarray,
    y: np.ndarray,
    l2: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> LinearModel:
    """Newton iterations on the L2-penalised mean log loss (bias unpenalised).

    Features are standardised with the training statistics before fitting.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("non-finite features")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    n, p = x.shape
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    if y.min() == y.max():
        warnings.warn("single-class training fold; predicting a constant", stacklevel=2)
        return LinearModel(np.zeros(p), 0.0, l2, True, mean, scale, constant=float(y[0]))

    z = np.hstack([(x - mean) / scale, np.ones((n, 1))])
    theta = np.zeros(p + 1)
    prior = y.mean()
    theta[-1] = np.log(prior / (1 - prior))
    penalty = np.full(p + 1, l2 / n)
    penalty[-1] = 0.0
    converged = False
    for _ in range(max_iter):
        prob = expit(z @ theta)
        grad = z.T @ (prob - y) / n + penalty * theta
        if np.linalg.norm(grad) <= tol:
            converged = True
            break
        hess = (z * (prob * (1 - prob))[:, None]).T @ z / n + np.diag(penalty)
        hess[np.diag_indices_from(hess)] += 1e-12
        step = np.linalg.solve(hess, grad)
        # backtracking keeps Newton monotone on near-separable data
        loss = _loss(z, y, theta, penalty)
        t = 1.0
        while t > 1e-10 and _loss(z, y, theta - t * step, penalty) > loss - 1e-4 * t * grad @ step:
            t *= 0.5
        theta = theta - t * step
    else:
        prob = expit(z @ theta)
        grad = z.T @ (prob - y) / n + penalty * theta
        converged = bool(np.linalg.norm(grad) <= tol)
    if not converged:
        log.warning("logistic fit stopped at max_iter=%d before reaching tol", max_iter)
    return LinearModel(theta[:-1].copy(), float(theta[-1]), l2, converged, mean, scale)


def _loss(z, y, theta, penalty) -> float:
    m = z @ theta
    # log(1 + exp(m)) - y m, computed stably
    return float(np.mean(np.logaddexp(0.0, m) - y * m) + 0.5 * np.sum(penalty * theta**2))


def fit_predict(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_test: np.ndarray,
    l2: float = 1.0,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> np.ndarray:
    return fit_logistic(x_train, y_train, l2, tol, max_iter).predict_proba(x_test)


def auroc(y_true, y_score) -> float | None:
    """Mann-Whitney AUROC with average ranks for ties; None for one class."""
    y = np.asarray(y_true)
    s = np.asarray(y_score, dtype=float)
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auprc(y_true, y_score) -> float | None:
    """Average precision: sum over distinct thresholds of recall gain x precision."""
    y = np.asarray(y_true)
    s = np.asarray(y_score, dtype=float)
    n_pos = int((y == 1).sum())
    if n_pos == 0 or n_pos == len(y):
        return None
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y == 1)
    fp = np.cumsum(y != 1)
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]  # end of each tie block
    tp, fp = tp[last], fp[last]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    gains = np.diff(np.r_[0.0, recall])
    return float(np.sum(gains * precision))


def compute_metrics(y_true, y_prob, threshold: float = 0.5) -> dict[str, float | None]:
    y = np.asarray(y_true)
    pred = (np.asarray(y_prob) >= threshold).astype(int)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "auroc": auroc(y, y_prob),
        "auprc": auprc(y, y_prob),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "accuracy": float((pred == y).mean()),
    }


def summarize(fold_metrics: Sequence[dict[str, float | None]]) -> dict[str, dict[str, float] | None]:
    """Mean and standard deviation of each metric over the folds that define it."""
    out: dict[str, dict[str, float] | None] = {}
    for name in METRICS:
        vals = [m[name] for m in fold_metrics if m.get(name) is not None]
        out[name] = (
            {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n_folds": len(vals)} if vals else None
        )
    return out


def flip_labels(y: Sequence[int], fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Invert exactly ``round(fraction * N)`` labels chosen uniformly at random."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    y = np.asarray(y).astype(np.int64)
    n_flip = int(round(fraction * len(y)))
    rng = np.random.default_rng(seed)
    mask = np.zeros(len(y), dtype=bool)
    mask[rng.choice(len(y), size=n_flip, replace=False)] = True
    return np.where(mask, 1 - y, y), mask
