"""Quantification front-end: transform, solve, and adjust posteriors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .classifier import CrossValConfig, LogisticModel, OutOfFold, out_of_fold_proba, predict_proba
from .classifier import fit as fit_logistic
from .core import (
    Dataset,
    ProbabilityMatrix,
    ProportionVector,
    RegressionSystem,
    SolveResult,
    naive_estimate,
)
from .errors import ConfigError, ContractError, ZeroPriorError
from .solvers import Loss, SolverConfig, _tangent_basis, solve
from .transforms import (
    DISTRIBUTION_METHODS,
    Method,
    TransformSpec,
    design_matrix,
    target_vector,
    transform_matrix,
)

DEFAULT_LOSS = {
    Method.VA: Loss.LEAST_SQUARES,
    Method.HDX: Loss.HELLINGER,
    Method.FM: Loss.LEAST_SQUARES,
    Method.AC: Loss.LEAST_SQUARES,
    Method.MS: Loss.LEAST_SQUARES,
    Method.PROB: Loss.LEAST_SQUARES,
    Method.MM: Loss.LEAST_ABSOLUTE_DEVIATION,
    Method.HDY: Loss.HELLINGER,
}

# smallest tangent singular value, in units of the class-mean standard error,
# below which class columns are indistinguishable from sampling noise
NEAR_DEFICIENT_SNR = 2.0

@dataclass(frozen=True)
class QuantifierConfig:
    method: Method = Method.PROB
    loss_override: Optional[Loss] = None
    transform: Optional[TransformSpec] = None
    solver: SolverConfig = SolverConfig()
    cv: CrossValConfig = CrossValConfig()
    regularization: float = 1.0
    label: Optional[str] = None

    def __post_init__(self):
        method = Method.parse(self.method)
        object.__setattr__(self, "method", method)
        if self.loss_override is not None:
            object.__setattr__(self, "loss_override", Loss(self.loss_override))
        if method is Method.NAIVE:
            if self.transform is not None:
                raise ConfigError("Naive takes no transform")
        elif self.transform is None:
            object.__setattr__(self, "transform", TransformSpec(method))
        elif self.transform.method is not method:
            raise ConfigError(f"transform is for {self.transform.method.value}, method is {method.value}")
        if self.loss is Loss.HELLINGER and method not in DISTRIBUTION_METHODS:
            raise ConfigError(f"Hellinger loss needs a distribution-valued transform, not {method.value}")
        if self.label is None:
            object.__setattr__(self, "label", method.value)

    @property
    def loss(self) -> Optional[Loss]:
        if self.method is Method.NAIVE:
            return None
        return self.loss_override or DEFAULT_LOSS[self.method]


@dataclass(frozen=True, eq=False)
class QuantificationResult:
    estimate: ProportionVector
    naive: ProportionVector
    solve: Optional[SolveResult]
    method: Method
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "method": self.method.value,
            "estimate": self.estimate.tolist(),
            "naive": self.naive.tolist(),
            "diagnostics": dict(self.diagnostics),
        }
        if self.solve is not None:
            out["solve"] = {
                "loss_value": self.solve.loss_value,
                "iterations": self.solve.iterations,
                "converged": self.solve.converged,
                "non_unique": self.solve.non_unique,
            }
        return out


def _design_diagnostics(design: np.ndarray, rows: np.ndarray, labels: np.ndarray) -> dict:
    """Conditioning of the design, judged against its own sampling noise.

    ``rows`` are the per-row transforms behind the first block of ``design``.
    A unit direction ``v`` in the tangent space moves the fit by
    ``|X v|``; if class columns only differ by noise, that is about
    ``sqrt(max_k trace(cov_k) / n_k)``.
    """
    k = design.shape[1]
    s = np.linalg.svd(design, compute_uv=False)
    s_tan = np.linalg.svd(design[: rows.shape[1]] @ _tangent_basis(k), compute_uv=False)
    top = s[0] if s.size else 0.0
    smallest_tan = s_tan[-1] if s_tan.size == k - 1 else 0.0
    noise2 = 0.0
    for c in range(k):
        r = rows[labels == c]
        if r.shape[0] > 1:
            noise2 = max(noise2, float(r.var(axis=0, ddof=1).sum()) / r.shape[0])
    snr = smallest_tan / np.sqrt(noise2) if noise2 > 0 else float("inf")
    return {
        "design_condition": float(top / s[-1]) if s.size == k and s[-1] > 0 else float("inf"),
        "tangent_singular_ratio": float(smallest_tan / top) if top > 0 else 0.0,
        "separation_snr": float(snr),
        "near_deficient": float(snr < NEAR_DEFICIENT_SNR),
    }


class Quantifier:
    """A method fitted on training data, reusable across unlabeled sets.

    Out-of-fold posteriors are computed at ``fit`` unless supplied; the
    full-data logistic model is fitted on first use unless supplied.
    """

    def __init__(self, config: QuantifierConfig = QuantifierConfig()):
        self.config = config
        self.model: Optional[LogisticModel] = None
        self.training: Optional[Dataset] = None
        self.design: Optional[np.ndarray] = None
        self.blocks: tuple = ()
        self._diag: dict = {}

    def fit(
        self,
        training: Dataset,
        model: Optional[LogisticModel] = None,
        training_probs: Union[OutOfFold, ProbabilityMatrix, list, None] = None,
    ) -> "Quantifier":
        training.require_labels()
        training.require_all_classes()
        cfg = self.config
        self.training = training
        self.training_proportions = training.proportions()
        self.model = model
        if cfg.method is Method.NAIVE:
            return self
        if cfg.transform.needs_classifier:
            if training_probs is None:
                training_probs = out_of_fold_proba(training, cfg.cv, cfg.regularization)
            if isinstance(training_probs, OutOfFold):
                training_probs = training_probs.for_design()
        else:
            training_probs = None
        self.design, self.blocks = design_matrix(cfg.transform, training, training_probs)
        first = training_probs[0] if isinstance(training_probs, list) else training_probs
        rows = transform_matrix(cfg.transform, training.features, first, self.training_proportions)
        self._diag = _design_diagnostics(self.design, rows, training.labels)
        return self

    def unlabeled_probs(self, unlabeled: Dataset) -> ProbabilityMatrix:
        if self.model is None:
            self.model = fit_logistic(self.training, self.config.regularization)
        return predict_proba(self.model, unlabeled)

    def quantify(self, unlabeled: Dataset, unlabeled_probs: Optional[ProbabilityMatrix] = None) -> QuantificationResult:
        if self.training is None:
            raise ContractError("quantifier is not fitted")
        if unlabeled.n_features != self.training.n_features:
            raise ContractError(
                f"unlabeled data has {unlabeled.n_features} features, training has {self.training.n_features}"
            )
        if unlabeled_probs is None:
            unlabeled_probs = self.unlabeled_probs(unlabeled)
        if unlabeled_probs.n_classes != self.training.n_classes:
            raise ContractError(
                f"unlabeled probabilities have {unlabeled_probs.n_classes} classes, "
                f"training has {self.training.n_classes}"
            )
        naive = naive_estimate(unlabeled_probs)
        cfg = self.config
        if cfg.method is Method.NAIVE:
            return QuantificationResult(naive, naive, None, cfg.method, {})
        target = target_vector(cfg.transform, unlabeled, unlabeled_probs, self.training_proportions)
        reps = self.design.shape[0] // target.shape[0]
        system = RegressionSystem(
            self.design, np.tile(target, reps), None, self.blocks, cfg.method in DISTRIBUTION_METHODS
        )
        result = solve(system, cfg.solver.with_loss(cfg.loss))
        diag = dict(self._diag)
        diag["residual_inf_norm"] = float(np.abs(result.residual).max())
        diag["residual_norm"] = float(np.linalg.norm(result.residual))
        diag["non_unique"] = float(result.non_unique)
        return QuantificationResult(result.proportions, naive, result, cfg.method, diag)


def quantify(
    method_config: QuantifierConfig,
    training: Dataset,
    unlabeled: Dataset,
    external_probs: Optional[tuple[ProbabilityMatrix, ProbabilityMatrix]] = None,
) -> QuantificationResult:
    """Estimate the class proportions of ``unlabeled``.

    ``external_probs`` is an optional ``(training out-of-fold, unlabeled)``
    pair of posterior matrices from any classifier; without it the built-in
    logistic model is fitted.
    """
    train_p, unl_p = external_probs if external_probs is not None else (None, None)
    return Quantifier(method_config).fit(training, training_probs=train_p).quantify(unlabeled, unl_p)


def adjust_posteriors(
    probs: ProbabilityMatrix,
    training_proportions: ProportionVector,
    estimated_proportions: ProportionVector,
) -> ProbabilityMatrix:
    """Reweight posteriors by estimated-to-training prior ratios and renormalize.

    A row whose reweighted terms are all zero carries no information under
    the new priors and is set to the estimated proportions.
    """
    pi_t = np.asarray(training_proportions, dtype=float)
    pi_f = np.asarray(estimated_proportions, dtype=float)
    P = probs.probs
    if not (pi_t.size == pi_f.size == P.shape[1]):
        raise ContractError(f"sizes disagree: probs K={P.shape[1]}, priors {pi_t.size} and {pi_f.size}")
    bad = (pi_t == 0) & (pi_f > 0)
    if np.any(bad):
        raise ZeroPriorError(f"training proportion is zero for classes {np.flatnonzero(bad).tolist()}")
    ratio = np.divide(pi_f, pi_t, out=np.zeros_like(pi_f), where=pi_t > 0)
    num = P * ratio
    total = num.sum(axis=1, keepdims=True)
    empty = total[:, 0] <= 0
    if np.any(empty):
        num[empty] = pi_f
        total[empty] = pi_f.sum()
    return ProbabilityMatrix(num / total, probs.source)
