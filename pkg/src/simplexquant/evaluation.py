"""Experiment protocol: proportion scenarios, test-set sampling and scoring.

A suite fixes the training set, samples one test set per scenario
proportion from a disjoint labeled pool, runs every method plus the Naive
and Truth baselines, and scores each with MAD and post-adjustment accuracy.
"""
from __future__ import annotations

import csv
import enum
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classifier import CrossValConfig, fit, out_of_fold_proba, predict_proba
from .core import Dataset, ProportionVector, make_proportion, naive_estimate
from .errors import ConfigError, ContractError, PoolExhaustedError, QuantificationError
from .quantifiers import Quantifier, QuantifierConfig, adjust_posteriors
from .transforms import FEATURE_METHODS, Method

WALK_SMOOTHING = 1e-3

_CASE_ERRORS = (QuantificationError, ValueError, ArithmeticError, np.linalg.LinAlgError)


class ScenarioKind(str, enum.Enum):
    GRID = "grid"
    GRID_SAMPLE = "grid_sample"
    DIRICHLET_WALK = "dirichlet_walk"


def _grid_divisions(step: float) -> int:
    if not step > 0:
        raise ConfigError("grid step must be positive")
    n = round(1.0 / step)
    if n < 1 or abs(1.0 / step - n) > 1e-9:
        raise ConfigError(f"grid step {step} does not divide 1")
    return n


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind = ScenarioKind.GRID
    step: float = 0.1
    sample_count: int = 20
    walk_concentration: float = 50.0
    rng_seed: int = 0
    start: Optional[ProportionVector] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if self.kind is not ScenarioKind.DIRICHLET_WALK:
            _grid_divisions(self.step)
        if not self.walk_concentration > 0:
            raise ConfigError("walk_concentration must be positive")
        if self.kind is not ScenarioKind.GRID and self.sample_count < 1:
            raise ConfigError("sample_count must be at least 1")

    def generate(self, n_classes: int, training_proportions: ProportionVector) -> list[ProportionVector]:
        if self.kind is ScenarioKind.GRID:
            return enumerate_grid(n_classes, self.step)
        if self.kind is ScenarioKind.GRID_SAMPLE:
            return sample_grid(n_classes, self.step, self.sample_count, self.rng_seed)
        start = self.start if self.start is not None else training_proportions
        return dirichlet_walk(start, self.sample_count, self.walk_concentration, self.rng_seed)


def grid_size(n_classes: int, step: float) -> int:
    n = _grid_divisions(step)
    return math.comb(n + n_classes - 1, n_classes - 1)


def _grid_counts(n_classes: int, n: int) -> np.ndarray:
    # stars and bars; combinations come out in lexicographic order of the parts
    bars = np.array(list(itertools.combinations(range(n + n_classes - 1), n_classes - 1)), dtype=np.int64)
    bars = bars.reshape(-1, n_classes - 1)
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), n + n_classes - 1)])
    return np.diff(edges, axis=1) - 1


def enumerate_grid(n_classes: int, step: float) -> list[ProportionVector]:
    """Every proportion vector with entries on multiples of ``step``, lexicographic."""
    if n_classes < 2:
        raise ConfigError("the grid needs K >= 2")
    n = _grid_divisions(step)
    return [ProportionVector(row) for row in _grid_counts(n_classes, n) / n]


def sample_grid(n_classes: int, step: float, count: int, seed: int) -> list[ProportionVector]:
    """Uniform sample of grid points without replacement."""
    if n_classes < 2:
        raise ConfigError("the grid needs K >= 2")
    n = _grid_divisions(step)
    size = math.comb(n + n_classes - 1, n_classes - 1)
    if not 0 <= count <= size:
        raise ConfigError(f"cannot sample {count} of {size} grid points")
    picks = np.random.default_rng(seed).choice(size, size=count, replace=False)
    counts = _grid_counts(n_classes, n)[picks]
    return [ProportionVector(row) for row in counts / n]


def dirichlet_walk(start: ProportionVector, steps: int, concentration: float, seed: int) -> list[ProportionVector]:
    """Random walk ``p' ~ Dirichlet(concentration * p + smoothing)`` from ``start``.

    ``start`` itself is not part of the returned sequence.
    """
    if steps < 1:
        raise ConfigError("walk needs at least one step")
    if not concentration > 0:
        raise ConfigError("concentration must be positive")
    cur = np.maximum(np.asarray(start, dtype=float), 1e-3)
    cur = cur / cur.sum()
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(steps):
        draw = rng.dirichlet(concentration * cur + WALK_SMOOTHING)
        p = make_proportion(draw)
        out.append(p)
        cur = p.values
    return out


def apportion(target: ProportionVector, size: int) -> np.ndarray:
    """Largest-remainder integer counts summing to ``size``; ties go to the lower index."""
    quota = np.asarray(target, dtype=float) * size
    counts = np.floor(quota + 1e-9).astype(np.int64)
    rem = quota - counts
    short = size - int(counts.sum())
    if short > 0:
        # stable sort on -remainder keeps lower indices first among ties
        order = np.argsort(-np.round(rem, 12), kind="stable")
        counts[order[:short]] += 1
    return counts


def materialize_test(pool: Dataset, target: ProportionVector, size: int, seed) -> Dataset:
    """Sample ``size`` labeled rows from ``pool`` with class counts matching ``target``."""
    pool.require_labels()
    if len(target) != pool.n_classes:
        raise ContractError(f"target has {len(target)} classes, pool has {pool.n_classes}")
    if size < 1:
        raise ContractError("test size must be positive")
    counts = apportion(target, size)
    rng = np.random.default_rng(seed)
    rows = []
    for k, c in enumerate(counts):
        if c == 0:
            continue
        idx = np.flatnonzero(pool.labels == k)
        if idx.size < c:
            raise PoolExhaustedError(pool.class_names[k], int(c), int(idx.size))
        rows.append(rng.choice(idx, size=int(c), replace=False))
    rows = rng.permutation(np.concatenate(rows))
    return pool.subset(rows)


def mad(estimate, truth) -> float:
    """Mean absolute deviation between two proportion vectors (averaged over classes)."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"cannot compare proportions of length {a.size} and {b.size}")
    return float(np.mean(np.abs(a - b)))


def accuracy(probs, labels) -> float:
    p = probs.probs if hasattr(probs, "probs") else np.asarray(probs)
    return float(np.mean(np.argmax(p, axis=1) == np.asarray(labels)))


@dataclass
class CaseResult:
    index: int
    true_proportions: list
    shift_mad: float
    estimates: dict = field(default_factory=dict)
    mad: dict = field(default_factory=dict)
    accuracy: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    naive_estimate: list = field(default_factory=list)
    naive_mad: float = 0.0
    naive_accuracy: float = 0.0
    truth_accuracy: float = 0.0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "true_proportions": self.true_proportions,
            "shift_mad": self.shift_mad,
            "estimates": self.estimates,
            "mad": self.mad,
            "accuracy": self.accuracy,
            "errors": self.errors,
            "naive_estimate": self.naive_estimate,
            "naive_mad": self.naive_mad,
            "naive_accuracy": self.naive_accuracy,
            "truth_accuracy": self.truth_accuracy,
        }


@dataclass
class EvalReport:
    methods: list
    per_case: list
    aggregates: dict
    settings: dict = field(default_factory=dict)

    @property
    def error_count(self) -> int:
        return sum(len(c.errors) for c in self.per_case)

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "methods": self.methods,
            "aggregates": self.aggregates,
            "cases": [c.to_dict() for c in self.per_case],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["case", "method", "true_proportions", "estimate", "mad", "accuracy", "shift_mad", "error"])

        def fmt(v):
            return ";".join(repr(float(x)) for x in v) if v is not None else ""

        for c in self.per_case:
            truth = fmt(c.true_proportions)
            for m in self.methods:
                w.writerow([
                    c.index, m, truth, fmt(c.estimates.get(m)),
                    "" if m not in c.mad else repr(c.mad[m]),
                    "" if m not in c.accuracy else repr(c.accuracy[m]),
                    repr(c.shift_mad), c.errors.get(m, ""),
                ])
            w.writerow([c.index, "Naive", truth, fmt(c.naive_estimate), repr(c.naive_mad),
                        repr(c.naive_accuracy), repr(c.shift_mad), ""])
            w.writerow([c.index, "Truth", truth, truth, repr(0.0), repr(c.truth_accuracy), repr(c.shift_mad), ""])
        return buf.getvalue()


def _aggregate(methods, cases) -> dict:
    agg = {}
    for m in methods:
        mads = [c.mad[m] for c in cases if m in c.mad]
        accs = [c.accuracy[m] for c in cases if m in c.accuracy]
        agg[m] = {
            "mean_mad": float(np.mean(mads)) if mads else None,
            "mean_accuracy": float(np.mean(accs)) if accs else None,
            "cases": len(mads),
            "errors": sum(1 for c in cases if m in c.errors),
        }
    agg["Naive"] = {
        "mean_mad": float(np.mean([c.naive_mad for c in cases])) if cases else None,
        "mean_accuracy": float(np.mean([c.naive_accuracy for c in cases])) if cases else None,
        "cases": len(cases),
        "errors": 0,
    }
    agg["Truth"] = {
        "mean_mad": 0.0 if cases else None,
        "mean_accuracy": float(np.mean([c.truth_accuracy for c in cases])) if cases else None,
        "cases": len(cases),
        "errors": 0,
    }
    return agg


def run_suite(
    training: Dataset,
    pool: Dataset,
    scenarios: ScenarioSpec,
    methods: Sequence[QuantifierConfig],
    test_size: int,
    regularization: float = 1.0,
    cv: CrossValConfig = CrossValConfig(),
    jobs: int = 1,
    proportions: Optional[Sequence[ProportionVector]] = None,
) -> EvalReport:
    """Run every method on one sampled test set per scenario proportion.

    The suite-level classifier (``regularization``) produces the Naive
    baseline and the posteriors whose adjusted argmax is scored for
    accuracy.  Pass ``proportions`` to bypass ``scenarios.generate``.
    """
    training.require_labels()
    training.require_all_classes()
    pool.require_labels()
    if pool.class_names != training.class_names:
        raise ContractError("training and pool use different class tables")
    if pool.n_features != training.n_features:
        raise ContractError(f"pool has {pool.n_features} features, training has {training.n_features}")
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate method labels: {labels}")

    pi_t = training.proportions()
    targets = list(proportions) if proportions is not None else scenarios.generate(training.n_classes, pi_t)

    # training-side statistics: computed once, shared read-only by all cases
    models = {regularization: fit(training, regularization)}
    oof_cache: dict = {}
    fitted: dict = {}
    fit_errors: dict = {}
    for m in methods:
        lam = m.regularization
        if lam not in models:
            models[lam] = fit(training, lam)
        try:
            probs = None
            if m.method not in FEATURE_METHODS and m.method is not Method.NAIVE:
                key = (m.cv, lam)
                if key not in oof_cache:
                    oof_cache[key] = out_of_fold_proba(training, m.cv, lam)
                probs = oof_cache[key]
            fitted[m.label] = Quantifier(m).fit(training, model=models[lam], training_probs=probs)
        except _CASE_ERRORS as exc:
            fit_errors[m.label] = f"{type(exc).__name__}: {exc}"

    def run_case(i: int) -> CaseResult:
        target = targets[i]
        test = materialize_test(pool, target, test_size, [scenarios.rng_seed, i])
        realized = test.proportions()
        unlabeled = test.without_labels()
        probs_by_lam = {lam: predict_proba(model, unlabeled) for lam, model in models.items()}
        base = probs_by_lam[regularization]
        case = CaseResult(index=i, true_proportions=realized.tolist(), shift_mad=mad(realized, pi_t))
        for m in methods:
            if m.label in fit_errors:
                case.errors[m.label] = fit_errors[m.label]
                continue
            try:
                est = fitted[m.label].quantify(unlabeled, probs_by_lam[m.regularization]).estimate
                case.estimates[m.label] = est.tolist()
                case.mad[m.label] = mad(est, realized)
                case.accuracy[m.label] = accuracy(adjust_posteriors(base, pi_t, est), test.labels)
            except _CASE_ERRORS as exc:
                case.errors[m.label] = f"{type(exc).__name__}: {exc}"
        naive = naive_estimate(base)
        case.naive_estimate = naive.tolist()
        case.naive_mad = mad(naive, realized)
        case.naive_accuracy = accuracy(base, test.labels)
        case.truth_accuracy = accuracy(adjust_posteriors(base, pi_t, realized), test.labels)
        return case

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            cases = list(ex.map(run_case, range(len(targets))))
    else:
        cases = [run_case(i) for i in range(len(targets))]

    settings = {
        "scenario": {
            "kind": scenarios.kind.value,
            "step": scenarios.step,
            "sample_count": scenarios.sample_count,
            "walk_concentration": scenarios.walk_concentration,
            "rng_seed": scenarios.rng_seed,
        },
        "test_size": test_size,
        "regularization": regularization,
        "training_proportions": pi_t.tolist(),
        "class_names": list(training.class_names),
    }
    return EvalReport(labels, cases, _aggregate(labels, cases), settings)
