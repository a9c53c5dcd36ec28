"""Feature transformations and assembly of the regression system.

Every quantification method is a choice of transform ``f(x)``; the design
column for class ``k`` is the mean transform over training rows of class
``k`` and the target is the mean transform over unlabeled rows.

Classifier-based transforms (FM, AC, MS, Prob, MM, HDy) read a row of
posteriors; HDx and VA read binary features directly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import Dataset, ProbabilityMatrix, ProportionVector, RegressionSystem
from .errors import (
    BinaryFeaturesRequired,
    ConfigError,
    ContractError,
    DegenerateClassError,
    RangeError,
)

MAX_NTUPLE_BITS = 16


class Method(str, enum.Enum):
    VA = "VA"
    HDX = "HDx"
    FM = "FM"
    AC = "AC"
    MS = "MS"
    PROB = "Prob"
    MM = "MM"
    HDY = "HDy"
    NAIVE = "Naive"

    @classmethod
    def parse(cls, name) -> "Method":
        if isinstance(name, cls):
            return name
        for m in cls:
            if m.value.lower() == str(name).lower():
                return m
        raise ConfigError(f"unknown method {name!r}; choose from {[m.value for m in cls]}")


TRANSFORM_METHODS = tuple(m for m in Method if m is not Method.NAIVE)
CLASSIFIER_METHODS = (Method.FM, Method.AC, Method.MS, Method.PROB, Method.MM, Method.HDY)
FEATURE_METHODS = (Method.HDX, Method.VA)
DISTRIBUTION_METHODS = (Method.HDY, Method.HDX, Method.VA)

DEFAULT_THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass(frozen=True)
class TransformSpec:
    method: Method = Method.PROB
    bins: int = 10
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    subset_size: int = 5
    subset_count: int = 50
    rng_seed: int = 0

    def __post_init__(self):
        method = Method.parse(self.method)
        if method is Method.NAIVE:
            raise ConfigError("Naive has no feature transform")
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if method in (Method.MM, Method.HDY) and self.bins < 2:
            raise ConfigError("bins must be at least 2")
        if method is Method.MS:
            t = np.asarray(self.thresholds)
            if t.size == 0 or np.any(t <= 0) or np.any(t >= 1) or np.any(np.diff(t) <= 0):
                raise ConfigError("MS thresholds must be strictly increasing values in (0, 1)")
        if method is Method.VA:
            if not 1 <= self.subset_size <= MAX_NTUPLE_BITS:
                raise ConfigError(f"subset_size must be in 1..{MAX_NTUPLE_BITS}")
            if self.subset_count < 1:
                raise ConfigError("subset_count must be at least 1")

    @property
    def needs_classifier(self) -> bool:
        return self.method in CLASSIFIER_METHODS

    def output_length(self, n_classes: int, n_features: int) -> int:
        m = self.method
        if m in (Method.FM, Method.AC, Method.PROB):
            return n_classes
        if m is Method.MS:
            return n_classes * len(self.thresholds)
        if m in (Method.MM, Method.HDY):
            return n_classes * self.bins
        if m is Method.HDX:
            return 2 * n_features
        return self.subset_count * 2**self.subset_size

    def blocks(self, n_classes: int, n_features: int) -> tuple[tuple[int, int], ...]:
        m = self.method
        if m in (Method.FM, Method.AC, Method.PROB):
            width, count = n_classes, 1
        elif m is Method.MS:
            width, count = len(self.thresholds), n_classes
        elif m in (Method.MM, Method.HDY):
            width, count = self.bins, n_classes
        elif m is Method.HDX:
            width, count = 2, n_features
        else:
            width, count = 2**self.subset_size, self.subset_count
        return tuple((i * width, (i + 1) * width) for i in range(count))


def bin_index(p, bins: int) -> np.ndarray:
    """Equal-width bin of each probability; the top bin is closed at 1."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise RangeError("bin input must lie in [0, 1]")
    return np.minimum(np.floor(p * bins).astype(np.int64), bins - 1)


def bin_onehot(p: float, bins: int) -> np.ndarray:
    if bins < 2:
        raise ConfigError("bins must be at least 2")
    out = np.zeros(bins)
    out[bin_index(p, bins)] = 1.0
    return out


def cumsum(v) -> np.ndarray:
    return np.cumsum(np.asarray(v, dtype=float))


def ntuple_index(bits) -> np.ndarray:
    """Big-endian integer code of each row of a 0/1 matrix."""
    bits = np.asarray(bits)
    if not np.all((bits == 0) | (bits == 1)):
        raise BinaryFeaturesRequired("ntuple encoding needs binary values")
    n = bits.shape[-1]
    if n > MAX_NTUPLE_BITS:
        raise ContractError(f"ntuple supports at most {MAX_NTUPLE_BITS} bits, got {n}")
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return bits.astype(np.int64) @ weights


def ntuple_onehot(v) -> np.ndarray:
    v = np.asarray(v).ravel()
    out = np.zeros(2 ** v.size)
    out[ntuple_index(v)] = 1.0
    return out


def va_subsets(spec: TransformSpec, n_features: int) -> np.ndarray:
    """Feature subsets sampled for VA; fixed by ``spec.rng_seed``."""
    if spec.subset_size > n_features:
        raise ConfigError(f"subset_size {spec.subset_size} exceeds {n_features} features")
    rng = np.random.default_rng(spec.rng_seed)
    return np.stack(
        [rng.choice(n_features, size=spec.subset_size, replace=False) for _ in range(spec.subset_count)]
    )


def _onehot_rows(idx: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((idx.shape[0], width))
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


def transform_matrix(
    spec: TransformSpec,
    features: Optional[np.ndarray] = None,
    probs: Optional[np.ndarray] = None,
    training_proportions: Optional[ProportionVector] = None,
) -> np.ndarray:
    """Apply the transform to every row; returns an ``N x L'`` matrix."""
    m = spec.method
    if m in CLASSIFIER_METHODS:
        if probs is None:
            raise ContractError(f"{m.value} needs classifier probabilities")
        P = np.asarray(probs.probs if isinstance(probs, ProbabilityMatrix) else probs, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        n, k = P.shape
        if m is Method.PROB:
            return P.copy()
        if m is Method.AC:
            return _onehot_rows(np.argmax(P, axis=1), k)
        if m is Method.FM:
            if training_proportions is None:
                raise ContractError("FM needs the training proportions")
            pi_t = np.asarray(training_proportions, dtype=float)
            if pi_t.size != k:
                raise ContractError(f"training proportions have {pi_t.size} classes, probabilities {k}")
            return (P >= pi_t).astype(float)
        if m is Method.MS:
            t = np.asarray(spec.thresholds)
            return (P[:, :, None] >= t[None, None, :]).astype(float).reshape(n, -1)
        idx = bin_index(P, spec.bins)
        onehot = np.zeros((n, k, spec.bins))
        np.put_along_axis(onehot, idx[:, :, None], 1.0, axis=2)
        if m is Method.MM:
            onehot = np.cumsum(onehot, axis=2)
        return onehot.reshape(n, -1)

    if features is None:
        raise ContractError(f"{m.value} needs the feature matrix")
    F = np.asarray(features, dtype=float)
    if F.ndim == 1:
        F = F[None, :]
    if not np.all((F == 0) | (F == 1)):
        raise BinaryFeaturesRequired(f"{m.value} needs binary features")
    n, v = F.shape
    if m is Method.HDX:
        out = np.zeros((n, v, 2))
        out[:, :, 1] = F
        out[:, :, 0] = 1.0 - F
        return out.reshape(n, -1)
    subsets = va_subsets(spec, v)
    width = 2**spec.subset_size
    out = np.zeros((n, subsets.shape[0], width))
    for s, cols in enumerate(subsets):
        out[np.arange(n), s, ntuple_index(F[:, cols])] = 1.0
    return out.reshape(n, -1)


def transform_row(
    spec: TransformSpec,
    x=None,
    probs_row=None,
    training_proportions: Optional[ProportionVector] = None,
) -> np.ndarray:
    """Transform a single row (features ``x`` and/or posterior row)."""
    return transform_matrix(
        spec,
        None if x is None else np.asarray(x, dtype=float)[None, :],
        None if probs_row is None else np.asarray(probs_row, dtype=float)[None, :],
        training_proportions,
    )[0]


ProbInput = Union[ProbabilityMatrix, Sequence[ProbabilityMatrix], None]


def _as_list(probs: ProbInput) -> list:
    if probs is None:
        return []
    if isinstance(probs, ProbabilityMatrix):
        return [probs]
    return list(probs)


def design_matrix(
    spec: TransformSpec,
    training: Dataset,
    training_probs: ProbInput = None,
) -> tuple[np.ndarray, tuple[tuple[int, int], ...]]:
    """Class-conditional mean transforms, one column per class.

    Several training probability matrices (cross-validation repeats) are
    stacked as extra row blocks.  Returns ``(design, blocks)``.
    """
    training.require_labels()
    counts = training.class_counts()
    if np.any(counts == 0):
        empty = [training.class_names[k] for k in np.flatnonzero(counts == 0)]
        raise DegenerateClassError(f"training classes without rows: {empty}")
    k = training.n_classes
    pi_t = training.proportions()
    onehot = np.zeros((training.n_rows, k))
    onehot[np.arange(training.n_rows), training.labels] = 1.0
    means = onehot / counts

    if spec.needs_classifier:
        plist = _as_list(training_probs)
        if not plist:
            raise ContractError(f"{spec.method.value} needs out-of-fold training probabilities")
        parts = []
        for p in plist:
            if p.n_rows != training.n_rows or p.n_classes != k:
                raise ContractError(
                    f"training probabilities are {p.n_rows}x{p.n_classes}, expected {training.n_rows}x{k}"
                )
            parts.append(transform_matrix(spec, probs=p, training_proportions=pi_t).T @ means)
    else:
        parts = [transform_matrix(spec, features=training.features).T @ means]
    base = spec.blocks(k, training.n_features)
    height = parts[0].shape[0]
    blocks = tuple((a + r * height, b + r * height) for r in range(len(parts)) for a, b in base)
    return np.vstack(parts), blocks


def target_vector(
    spec: TransformSpec,
    unlabeled: Dataset,
    unlabeled_probs: Optional[ProbabilityMatrix] = None,
    training_proportions: Optional[ProportionVector] = None,
) -> np.ndarray:
    """Mean transform over the unlabeled rows."""
    if spec.needs_classifier:
        if unlabeled_probs is None:
            raise ContractError(f"{spec.method.value} needs probabilities for the unlabeled rows")
        if unlabeled_probs.n_rows != unlabeled.n_rows:
            raise ContractError(
                f"{unlabeled_probs.n_rows} probability rows for {unlabeled.n_rows} unlabeled rows"
            )
        t = transform_matrix(spec, probs=unlabeled_probs, training_proportions=training_proportions)
    else:
        t = transform_matrix(spec, features=unlabeled.features)
    return t.mean(axis=0)


def build_system(
    spec: TransformSpec,
    training: Dataset,
    training_probs: ProbInput,
    unlabeled: Dataset,
    unlabeled_probs: Optional[ProbabilityMatrix],
) -> RegressionSystem:
    if unlabeled.n_features != training.n_features:
        raise ContractError(
            f"unlabeled data has {unlabeled.n_features} features, training has {training.n_features}"
        )
    design, blocks = design_matrix(spec, training, training_probs)
    target = target_vector(spec, unlabeled, unlabeled_probs, training.proportions())
    reps = design.shape[0] // target.shape[0]
    return RegressionSystem(
        design, np.tile(target, reps), None, blocks, spec.method in DISTRIBUTION_METHODS
    )
