"""Multinomial logistic regression and out-of-fold posterior estimates."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Dataset, ProbabilityMatrix, ProbSource, ProportionVector
from .errors import ConfigError, ContractError, NumericError, StratificationError

GRAD_TOL = 1e-5
MAX_ITER = 500


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """Fitted softmax model.  ``weights[:, :-1]`` are slopes, ``weights[:, -1]`` intercepts."""

    weights: np.ndarray
    regularization: float
    training_proportions: ProportionVector
    iterations: int = 0
    grad_norm: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if not np.all(np.isfinite(w)):
            raise NumericError("logistic weights are not finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


def _softmax(scores: np.ndarray) -> np.ndarray:
    s = scores - scores.max(axis=1, keepdims=True)
    np.exp(s, out=s)
    s /= s.sum(axis=1, keepdims=True)
    return s


def _smooth_part(W, Xa, Y):
    """Mean cross-entropy and its gradient."""
    n = Xa.shape[0]
    scores = Xa @ W.T
    m = scores.max(axis=1, keepdims=True)
    lse = np.log(np.exp(scores - m).sum(axis=1)) + m[:, 0]
    loss = float(np.mean(lse - np.sum(scores * Y, axis=1)))
    P = _softmax(scores)
    grad = (P - Y).T @ Xa / n
    return loss, grad


def fit(training: Dataset, regularization: float = 1.0, max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> LogisticModel:
    """Fit an L2-regularized softmax regression.

    Minimizes ``mean cross-entropy + regularization / (2 N) * ||slopes||^2``
    (intercepts are not penalized) by accelerated proximal gradient descent
    with backtracking and restarts on objective increase.  Stops once the
    gradient norm drops below ``tol`` or after ``max_iter`` iterations.
    """
    if regularization < 0:
        raise ConfigError("regularization must be nonnegative")
    training.require_labels()
    X = training.features
    if not np.all(np.isfinite(X)):
        raise NumericError("features contain non-finite values")
    n, v = X.shape
    k = training.n_classes
    Xa = np.hstack([X, np.ones((n, 1))])
    Y = np.zeros((n, k))
    Y[np.arange(n), training.labels] = 1.0
    pi_t = training.proportions()

    lam = regularization / n
    mask = np.ones((k, v + 1))
    mask[:, -1] = 0.0

    W = np.zeros((k, v + 1))
    # the intercept-only optimum is a good start: log training shares
    W[:, -1] = np.log(np.maximum(pi_t.values, 1e-12))
    W[:, -1] -= W[:, -1].mean()

    def objective(M):
        f, g = _smooth_part(M, Xa, Y)
        return f + 0.5 * lam * np.sum(mask * M * M), f, g

    F, _, _ = objective(W)
    Z, t, step = W.copy(), 1.0, 1.0
    it = 0
    grad_norm = np.inf
    for it in range(1, max_iter + 1):
        _, fz, gz = objective(Z)
        step *= 1.5
        while True:
            # gradient step on the cross-entropy, exact proximal step on the ridge term
            cand = (Z - step * gz) / (1.0 + step * lam * mask)
            f_new, g_new = _smooth_part(cand, Xa, Y)
            diff = cand - Z
            if f_new <= fz + np.sum(gz * diff) + np.sum(diff * diff) / (2.0 * step) + 1e-15:
                break
            step *= 0.5
            if step < 1e-20:
                break
        F_new = f_new + 0.5 * lam * np.sum(mask * cand * cand)
        if F_new > F:
            # momentum overshoot: restart from the last accepted iterate
            Z, t = W.copy(), 1.0
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = cand + ((t - 1.0) / t_new) * (cand - W)
        W, F, t = cand, F_new, t_new
        grad_norm = float(np.linalg.norm(g_new + lam * mask * W))
        if grad_norm <= tol:
            break
    return LogisticModel(W, float(regularization), pi_t, it, grad_norm)


def predict_proba(model: LogisticModel, data: Dataset) -> ProbabilityMatrix:
    if data.n_features != model.n_features:
        raise ContractError(f"data has {data.n_features} features, model expects {model.n_features}")
    scores = data.features @ model.weights[:, :-1].T + model.weights[:, -1]
    return ProbabilityMatrix(_softmax(scores), ProbSource.FULL_MODEL)


class Stacking(str, enum.Enum):
    AVERAGE = "average"
    STACK = "stack"


@dataclass(frozen=True)
class CrossValConfig:
    folds: int = 10
    repeats: int = 1
    rng_seed: int = 0
    stacking: Stacking = Stacking.AVERAGE

    def __post_init__(self):
        object.__setattr__(self, "stacking", Stacking(self.stacking))
        if self.folds < 2:
            raise ConfigError("cross-validation needs at least 2 folds")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")


def stratified_folds(labels: np.ndarray, n_classes: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id for every row, dealing each shuffled class round-robin.

    Rows of all classes are laid end to end and dealt to folds in turn, so
    per-class fold counts differ by at most one and fold sizes stay balanced.
    """
    labels = np.asarray(labels)
    if folds > labels.size:
        raise StratificationError(f"{folds} folds for {labels.size} rows")
    counts = np.bincount(labels, minlength=n_classes)
    short = np.flatnonzero(counts < 2)
    if short.size:
        raise StratificationError(
            f"classes {short.tolist()} have fewer than 2 rows; some fold would train without them"
        )
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in range(n_classes)])
    fold_of = np.empty(labels.size, dtype=np.int64)
    fold_of[order] = np.arange(labels.size) % folds
    return fold_of


@dataclass(frozen=True)
class OutOfFold:
    """Out-of-fold posteriors, one matrix per cross-validation repeat."""

    repeats: tuple[ProbabilityMatrix, ...]
    stacking: Stacking = Stacking.AVERAGE

    def averaged(self) -> ProbabilityMatrix:
        if len(self.repeats) == 1:
            return self.repeats[0]
        mean = np.mean([p.probs for p in self.repeats], axis=0)
        return ProbabilityMatrix(mean / mean.sum(axis=1, keepdims=True), ProbSource.OUT_OF_FOLD)

    def for_design(self):
        """What the design-matrix builder consumes under the chosen stacking."""
        if self.stacking is Stacking.STACK:
            return list(self.repeats)
        return self.averaged()


def out_of_fold_proba(training: Dataset, cv: CrossValConfig = CrossValConfig(), regularization: float = 1.0) -> OutOfFold:
    """Posterior for each training row from a model that never saw that row.

    Repeat ``r`` shuffles with seed ``cv.rng_seed + r``.
    """
    training.require_labels()
    n, k = training.n_rows, training.n_classes
    mats = []
    for r in range(cv.repeats):
        rng = np.random.default_rng(cv.rng_seed + r)
        fold_of = stratified_folds(training.labels, k, cv.folds, rng)
        probs = np.empty((n, k))
        for f in range(cv.folds):
            held = fold_of == f
            if not held.any():
                continue
            model = fit(training.subset(np.flatnonzero(~held)), regularization)
            probs[held] = predict_proba(model, training.subset(np.flatnonzero(held))).probs
        mats.append(ProbabilityMatrix(probs, ProbSource.OUT_OF_FOLD))
    return OutOfFold(tuple(mats), cv.stacking)
