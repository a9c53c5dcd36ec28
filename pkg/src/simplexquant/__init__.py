"""Multi-class quantification by simplex-constrained regression.

Each method maps rows through a fixed transform, builds a design matrix of
class-conditional mean transforms from training data, and regresses the
unlabeled mean transform on it with the estimate restricted to the simplex.
"""
from ._backend import BACKEND
from .classifier import CrossValConfig, LogisticModel, OutOfFold, Stacking, fit, out_of_fold_proba, predict_proba
from .core import Dataset, ProbabilityMatrix, ProbSource, ProportionVector, RegressionSystem, SolveResult
from .core import make_proportion, naive_estimate
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateInputError,
    PoolExhaustedError,
    QuantificationError,
    SolverFailure,
)
from .evaluation import EvalReport, ScenarioSpec, dirichlet_walk, enumerate_grid, mad, materialize_test
from .evaluation import run_suite, sample_grid
from .quantifiers import QuantificationResult, Quantifier, QuantifierConfig, adjust_posteriors, quantify
from .solvers import Loss, SolverConfig, binary_adjusted_count, project_to_simplex, solve
from .transforms import Method, TransformSpec, build_system, design_matrix, target_vector, transform_matrix

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "ContractError",
    "CrossValConfig",
    "DataError",
    "Dataset",
    "DegenerateInputError",
    "EvalReport",
    "LogisticModel",
    "Loss",
    "Method",
    "OutOfFold",
    "PoolExhaustedError",
    "ProbSource",
    "ProbabilityMatrix",
    "ProportionVector",
    "QuantificationError",
    "QuantificationResult",
    "Quantifier",
    "QuantifierConfig",
    "RegressionSystem",
    "ScenarioSpec",
    "SolveResult",
    "SolverConfig",
    "SolverFailure",
    "Stacking",
    "TransformSpec",
    "adjust_posteriors",
    "binary_adjusted_count",
    "build_system",
    "design_matrix",
    "dirichlet_walk",
    "enumerate_grid",
    "fit",
    "mad",
    "make_proportion",
    "materialize_test",
    "naive_estimate",
    "out_of_fold_proba",
    "predict_proba",
    "project_to_simplex",
    "quantify",
    "run_suite",
    "sample_grid",
    "solve",
    "target_vector",
    "transform_matrix",
]
