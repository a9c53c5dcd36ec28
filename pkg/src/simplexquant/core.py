"""Domain types shared across the toolkit.

All containers are immutable: arrays are copied on construction and marked
read-only, so instances can be shared freely between threads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, DegenerateInputError, NumericError

SIMPLEX_TOL = 1e-9
PROBA_TOL = 1e-6
NOISE_FLOOR = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class ProportionVector:
    """A point on the probability simplex with at least two coordinates."""

    __slots__ = ("_values",)

    def __init__(self, values):
        v = _frozen(values)
        if v.ndim != 1 or v.size < 2:
            raise ContractError(f"proportion vector needs K >= 2 entries, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericError("proportion vector has non-finite entries")
        if np.any(v < 0):
            raise ContractError(f"proportion vector has negative entries: {v.tolist()}")
        if abs(v.sum() - 1.0) > SIMPLEX_TOL:
            raise ContractError(f"proportions sum to {v.sum():.12g}, not 1")
        self._values = v

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self):
        return self._values.size

    def __getitem__(self, i):
        return float(self._values[i])

    def __iter__(self):
        return iter(self._values.tolist())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __eq__(self, other):
        if isinstance(other, ProportionVector):
            return np.array_equal(self._values, other._values)
        return NotImplemented

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        inner = ", ".join(f"{x:.6g}" for x in self._values)
        return f"ProportionVector([{inner}])"

    def tolist(self) -> list[float]:
        return self._values.tolist()


def make_proportion(raw) -> ProportionVector:
    """Coerce ``raw`` onto the simplex.

    Entries in ``[-1e-12, 0)`` are rounding noise and clamp to zero; the
    result is then renormalized to sum to exactly one.

    >>> make_proportion([2, 2]).tolist()
    [0.5, 0.5]
    """
    v = np.asarray(raw, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise NumericError("cannot build proportions from non-finite values")
    if np.any(v < -NOISE_FLOOR):
        raise DegenerateInputError(f"entries below -{NOISE_FLOOR:g}: {v.tolist()}")
    v = np.where(v < 0, 0.0, v)
    total = v.sum()
    if not total > 0:
        raise DegenerateInputError("all-zero input has no proportions")
    if abs(total - 1.0) <= 8 * np.finfo(float).eps * v.size:
        # already normalized up to summation rounding; keep it bit-for-bit
        return ProportionVector(v)
    v = v / total
    # push any leftover rounding into the largest entry so the sum is 1
    v[np.argmax(v)] += 1.0 - v.sum()
    return ProportionVector(v)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with optional integer labels and a class-name table.

    Labels are positional class indices into ``class_names``.  A labeled
    dataset need not contain every class (a sampled test set may not); the
    operations that do need every class check it themselves.
    """

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    class_names: tuple[str, ...] = ()
    binary_features: Optional[bool] = None

    def __post_init__(self):
        x = np.array(self.features, dtype=float, copy=True)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ContractError(f"features must be a nonempty N x V matrix, got shape {x.shape}")
        is_binary = bool(np.all((x == 0) | (x == 1)))
        if self.binary_features is None:
            object.__setattr__(self, "binary_features", is_binary)
        elif self.binary_features and not is_binary:
            raise ContractError("binary_features set but features are not all in {0, 1}")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        names = tuple(str(n) for n in self.class_names)
        object.__setattr__(self, "class_names", names)
        if self.labels is not None:
            y = np.array(self.labels, copy=True)
            if y.ndim != 1 or y.shape[0] != x.shape[0]:
                raise ContractError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
            if y.size and not np.issubdtype(y.dtype, np.integer):
                if not np.all(y == np.round(y)):
                    raise ContractError("labels must be integer class indices")
            y = y.astype(np.int64)
            if not names:
                raise ContractError("a labeled dataset needs class names")
            if np.any(y < 0) or np.any(y >= len(names)):
                raise ContractError(f"label index outside 0..{len(names) - 1}")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def class_counts(self) -> np.ndarray:
        self.require_labels()
        return np.bincount(self.labels, minlength=self.n_classes)

    def proportions(self) -> ProportionVector:
        return make_proportion(self.class_counts())

    def require_labels(self):
        if self.labels is None:
            raise ContractError("operation needs a labeled dataset")

    def require_all_classes(self):
        from .errors import DegenerateClassError

        counts = self.class_counts()
        empty = [self.class_names[k] for k in np.flatnonzero(counts == 0)]
        if empty:
            raise DegenerateClassError(f"classes with no rows: {empty}")

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.features[rows],
            None if self.labels is None else self.labels[rows],
            self.class_names,
            self.binary_features,
        )

    def without_labels(self) -> "Dataset":
        return Dataset(self.features, None, self.class_names, self.binary_features)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None
            and other.labels is not None
            and np.array_equal(self.labels, other.labels)
        )
        return (
            np.array_equal(self.features, other.features)
            and same_labels
            and self.class_names == other.class_names
            and self.binary_features == other.binary_features
        )

    __hash__ = None


class ProbSource(str, enum.Enum):
    OUT_OF_FOLD = "out_of_fold"
    FULL_MODEL = "full_model"
    EXTERNAL = "external"


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """Row-stochastic N x K matrix of posterior estimates."""

    probs: np.ndarray
    source: ProbSource = ProbSource.EXTERNAL

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 2 or p.shape[1] < 2:
            raise ContractError(f"probability matrix must be N x K with K >= 2, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise NumericError("probability matrix has non-finite entries")
        if np.any(p < -NOISE_FLOOR) or np.any(p > 1 + NOISE_FLOOR):
            raise ContractError("probability entries must lie in [0, 1]")
        np.clip(p, 0.0, 1.0, out=p)
        bad = np.abs(p.sum(axis=1) - 1.0) > PROBA_TOL
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise ContractError(f"row {row} sums to {p[row].sum():.9g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "source", ProbSource(self.source))

    @property
    def n_rows(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def argmax(self) -> np.ndarray:
        # np.argmax picks the first maximum, i.e. the lowest class index on ties
        return np.argmax(self.probs, axis=1)


def naive_estimate(probs: ProbabilityMatrix) -> ProportionVector:
    """Average the posterior rows: the unadjusted "classify and count" estimate."""
    p = probs.probs if isinstance(probs, ProbabilityMatrix) else np.asarray(probs, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise DegenerateInputError("naive estimate of an empty probability matrix")
    return make_proportion(p.mean(axis=0))


@dataclass(frozen=True, eq=False)
class RegressionSystem:
    """Design matrix, target and optional row weights for one constrained solve.

    ``blocks`` lists ``(start, stop)`` row ranges of the flattened transform.
    When ``distribution`` is true every block of every design column, and of
    the target, is a probability distribution.
    """

    design: np.ndarray
    target: np.ndarray
    row_weights: Optional[np.ndarray] = None
    blocks: tuple[tuple[int, int], ...] = ()
    distribution: bool = False

    def __post_init__(self):
        x = _frozen(self.design)
        y = _frozen(self.target)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ContractError(f"design must be a nonempty matrix, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ContractError(f"target length {y.shape} does not match {x.shape[0]} design rows")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NumericError("regression system has non-finite entries")
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "target", y)
        if self.row_weights is not None:
            w = _frozen(self.row_weights)
            if w.shape != y.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ContractError("row weights must be finite, nonnegative and one per row")
            object.__setattr__(self, "row_weights", w)
        blocks = tuple((int(a), int(b)) for a, b in self.blocks)
        for a, b in blocks:
            if not 0 <= a < b <= x.shape[0]:
                raise ContractError(f"block ({a}, {b}) outside design rows")
        object.__setattr__(self, "blocks", blocks)
        if self.distribution:
            for a, b in blocks:
                col_sums = x[a:b].sum(axis=0)
                if np.any(np.abs(col_sums - 1.0) > PROBA_TOL):
                    raise ContractError(f"design block ({a}, {b}) columns do not sum to 1")
                if abs(y[a:b].sum() - 1.0) > PROBA_TOL:
                    raise ContractError(f"target block ({a}, {b}) does not sum to 1")

    @property
    def n_rows(self) -> int:
        return self.design.shape[0]

    @property
    def n_classes(self) -> int:
        return self.design.shape[1]

    def weights(self) -> np.ndarray:
        if self.row_weights is None:
            return np.ones(self.n_rows)
        return self.row_weights

    def residual(self, proportions) -> np.ndarray:
        return self.target - self.design @ np.asarray(proportions, dtype=float)

    def scaled(self, factor: float) -> "RegressionSystem":
        return RegressionSystem(
            self.design * factor, self.target * factor, self.row_weights, self.blocks, self.distribution
        )


@dataclass(frozen=True, eq=False)
class SolveResult:
    proportions: ProportionVector
    residual: np.ndarray
    loss_value: float
    iterations: int
    converged: bool
    non_unique: bool = False
    history: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "residual", _frozen(self.residual))
        if self.history is not None:
            object.__setattr__(self, "history", _frozen(self.history))
