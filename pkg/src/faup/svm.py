"""Linear soft-margin SVM trained by SMO-style dual coordinate ascent.

The trainer is dependency-free and deterministic: it sweeps the samples in
index order, pairs each KKT violator with the partner of largest error
difference and applies the analytic two-variable update until the largest
KKT violation drops below tolerance.  ``qp_oracle_train`` solves the same
dual with an interior-point QP solver and exists purely as an independent
cross-check for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Converge well inside the 1e-3 KKT acceptance bound so the attained
# objective sits within 1e-3 of the true optimum as well.
KKT_TOL = 1e-5
MAX_EPOCHS = 10_000
_SV_SCORE_TOL = 1e-6
_SV_ALPHA_EPS = 1e-8


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: str


@dataclass(frozen=True)
class SVMModel:
    weights: np.ndarray
    bias: float
    C: float
    sv_count: int
    margin: float                 # geometric margin 2 / ||w||
    label_map: dict[int, str]     # {+1: positive class, -1: negative class}
    kkt_residual: float

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


def _as_arrays(samples: list[Sample]) -> tuple[np.ndarray, list[str]]:
    if len(samples) < 2:
        raise InvalidInputError("need at least 2 samples")
    dims = {np.asarray(s.features).shape for s in samples}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise InvalidInputError(f"inconsistent feature shapes: {sorted(dims)}")
    x = np.array([np.asarray(s.features, dtype=np.float64) for s in samples])
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("features must be finite")
    return x, [s.label for s in samples]


def _signed_labels(labels: list[str], positive_label: str | None):
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise InvalidInputError(f"need exactly 2 classes, got {classes}")
    if positive_label is None:
        positive_label = classes[1]
    if positive_label not in classes:
        raise InvalidInputError(f"positive label {positive_label!r} not in {classes}")
    negative_label = classes[0] if classes[1] == positive_label else classes[1]
    y = np.array([1.0 if lab == positive_label else -1.0 for lab in labels])
    return y, {1: positive_label, -1: negative_label}


def _kkt_violation(alpha: np.ndarray, y: np.ndarray, scores: np.ndarray,
                   C: float) -> float:
    margins = y * scores
    at_zero = alpha <= 1e-12
    at_c = alpha >= C - 1e-12 * max(C, 1.0)
    free = ~(at_zero | at_c)
    viol = np.zeros_like(alpha)
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[free] = np.abs(1.0 - margins[free])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    return float(viol.max()) if viol.size else 0.0


def _smo(x: np.ndarray, y: np.ndarray, C: float, tol: float,
         max_epochs: int) -> tuple[np.ndarray, float, float]:
    n = x.shape[0]
    kernel = x @ x.T
    alpha = np.zeros(n)
    b = 0.0
    errors = -y.astype(np.float64)  # E_i = f(x_i) - y_i, maintained incrementally
    eps = 1e-12 * max(C, 1.0)

    def update_pair(i: int, j: int) -> bool:
        nonlocal b, errors
        if i == j:
            return False
        a_i_old, a_j_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            low = max(0.0, a_j_old - a_i_old)
            high = min(C, C + a_j_old - a_i_old)
        else:
            low = max(0.0, a_i_old + a_j_old - C)
            high = min(C, a_i_old + a_j_old)
        if high - low < 1e-12:
            return False
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if eta <= 1e-12:
            return False
        a_j = a_j_old + y[j] * (errors[i] - errors[j]) / eta
        a_j = min(high, max(low, a_j))
        if abs(a_j - a_j_old) < 1e-14:
            return False
        a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
        d_i = y[i] * (a_i - a_i_old)
        d_j = y[j] * (a_j - a_j_old)
        b1 = b - errors[i] - d_i * kernel[i, i] - d_j * kernel[i, j]
        b2 = b - errors[j] - d_i * kernel[i, j] - d_j * kernel[j, j]
        if eps < a_i < C - eps:
            b_new = b1
        elif eps < a_j < C - eps:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2.0
        errors += d_i * kernel[:, i] + d_j * kernel[:, j] + (b_new - b)
        alpha[i], alpha[j] = a_i, a_j
        b = b_new
        return True

    for _ in range(max_epochs):
        for i in range(n):
            r = y[i] * errors[i]  # = y_i f(x_i) - 1
            if not ((r < -tol and alpha[i] < C - eps) or (r > tol and alpha[i] > eps)):
                continue
            order = np.argsort(-np.abs(errors - errors[i]), kind="stable")
            for j in order:
                if update_pair(i, int(j)):
                    break
        if _kkt_violation(alpha, y, errors + y, C) <= tol:
            break

    # refine the bias from free support vectors when available
    free_eps = 1e-8 * max(C, 1.0)
    free = (alpha > free_eps) & (alpha < C - free_eps)
    w = x.T @ (alpha * y)
    if np.any(free):
        b = float(np.mean(y[free] - x[free] @ w))
    scores = x @ w + b
    return alpha, b, _kkt_violation(alpha, y, scores, C)


def svm_train(samples: list[Sample], C: float = 1.0,
              positive_label: str | None = None, tol: float = KKT_TOL,
              max_epochs: int = MAX_EPOCHS) -> SVMModel:
    """Train a linear soft-margin classifier.

    Support vectors are the samples on or inside the margin band
    (|w.x + b| <= 1 + 1e-6) or with nonzero slack; the margin field is the
    geometric margin 2 / ||w||.
    """
    if C <= 0:
        raise InvalidInputError("C must be positive")
    x, labels = _as_arrays(samples)
    y, label_map = _signed_labels(labels, positive_label)
    alpha, b, residual = _smo(x, y, C, tol, max_epochs)
    w = x.T @ (alpha * y)
    scores = x @ w + b
    slack = np.maximum(0.0, 1.0 - y * scores)
    # margin band and slack identify SVs at the exact optimum; dual activity
    # covers margin points the finite-tolerance solve leaves marginally outside
    sv_mask = ((np.abs(scores) <= 1.0 + _SV_SCORE_TOL) | (slack > _SV_SCORE_TOL)
               | (alpha > _SV_ALPHA_EPS * max(C, 1.0)))
    norm = float(np.linalg.norm(w))
    margin = 2.0 / norm if norm > 0 else math.inf
    return SVMModel(weights=w, bias=float(b), C=float(C),
                    sv_count=int(sv_mask.sum()), margin=margin,
                    label_map=dict(label_map), kkt_residual=residual)


def svm_predict(model: SVMModel, x: np.ndarray) -> tuple[str, float]:
    """Label and raw score w.x + b; a score of exactly zero maps to +1."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != model.weights.shape:
        raise InvalidInputError(f"dimension mismatch: {arr.shape} != {model.weights.shape}")
    score = float(arr @ model.weights + model.bias)
    label = model.label_map[1] if score >= 0 else model.label_map[-1]
    return label, score


def svm_objective(w: np.ndarray, b: float, samples: list[Sample], C: float,
                  positive_label: str | None = None) -> float:
    """Primal objective 0.5 ||w||^2 + C * sum of hinge losses."""
    x, labels = _as_arrays(samples)
    y, _ = _signed_labels(labels, positive_label)
    slack = np.maximum(0.0, 1.0 - y * (x @ w + b))
    return float(0.5 * np.dot(w, w) + C * slack.sum())


def qp_oracle_train(samples: list[Sample], C: float = 1.0,
                    positive_label: str | None = None) -> tuple[np.ndarray, float]:
    """Independent dual QP solve for small instances (test oracle only).

    Accepts at most 12 samples of at most 3 dimensions and solves the
    box-constrained dual with an interior-point method.
    """
    from cvxopt import matrix, solvers

    if C <= 0:
        raise InvalidInputError("C must be positive")
    x, labels = _as_arrays(samples)
    n, d = x.shape
    if n > 12 or d > 3:
        raise InvalidInputError(f"oracle limited to <=12 samples and <=3 dims, got {n}x{d}")
    y, _ = _signed_labels(labels, positive_label)

    q_mat = np.outer(y, y) * (x @ x.T)
    q_mat = q_mat + 1e-12 * np.eye(n)  # keep the QP numerically PSD
    p = matrix(q_mat)
    q = matrix(-np.ones(n))
    g = matrix(np.vstack([-np.eye(n), np.eye(n)]))
    h = matrix(np.concatenate([np.zeros(n), np.full(n, C)]))
    a = matrix(y.reshape(1, n))
    b_eq = matrix(np.zeros(1))
    options = {"show_progress": False, "abstol": 1e-10, "reltol": 1e-10,
               "feastol": 1e-10}
    solution = solvers.qp(p, q, g, h, a, b_eq, options=options)
    if solution["status"] not in ("optimal", "unknown"):
        raise InvalidInputError(f"oracle QP failed: {solution['status']}")
    alpha = np.asarray(solution["x"]).ravel()
    w = x.T @ (alpha * y)
    eps = 1e-6 * max(C, 1.0)
    free = (alpha > eps) & (alpha < C - eps)
    if np.any(free):
        b = float(np.mean(y[free] - x[free] @ w))
    else:
        pos = y > 0
        b = -0.5 * (float(np.min(x[pos] @ w)) + float(np.max(x[~pos] @ w)))
    return w, b
