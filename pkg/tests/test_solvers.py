import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from oracles import grid_argmin, project_bruteforce
from simplexquant.core import RegressionSystem
from simplexquant.errors import (
    ConfigError,
    DegenerateClassifierError,
    InvalidSystemError,
    NumericError,
    RangeError,
    SolverFailure,
)
from simplexquant.solvers import (
    Loss,
    SolverConfig,
    binary_adjusted_count,
    is_non_unique,
    objective,
    project_to_simplex,
    solve,
    solve_hellinger,
    solve_least_absolute_deviation,
    solve_least_squares,
)

LS = SolverConfig(Loss.LEAST_SQUARES)
LAD = SolverConfig(Loss.LEAST_ABSOLUTE_DEVIATION)
HEL = SolverConfig(Loss.HELLINGER)


def system(cols, y):
    return RegressionSystem(np.column_stack(cols).astype(float), np.asarray(y, float))


def random_system(rng, k, m):
    X = rng.dirichlet(np.ones(m), size=k).T
    y = rng.dirichlet(np.ones(m))
    return RegressionSystem(X, y)


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"tolerance": 0}, {"max_iterations": 0}, {"hellinger_floor": -1}, {"backend": "fortran"}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SolverConfig(**kw)


class TestProjection:
    @pytest.mark.parametrize("v,expected", [((0.2, 0.8), (0.2, 0.8)), ((2, 0), (1, 0)), ((0.6, 0.6), (0.5, 0.5))])
    def test_examples(self, v, expected):
        assert project_to_simplex(v).tolist() == pytest.approx(expected, abs=1e-12)

    def test_matches_grid(self):
        # grid resolution 1e-4 bounds the oracle error
        for v in [(0.6, 0.6), (1.7, -0.3), (-2.0, 0.45)]:
            assert project_to_simplex(v).tolist() == pytest.approx(project_bruteforce(v), abs=1e-4)

    def test_non_finite(self):
        with pytest.raises(NumericError):
            project_to_simplex([np.inf, 0.0])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12))
    def test_optimality(self, v):
        v = np.asarray(v)
        p = project_to_simplex(v).values
        # KKT: p = max(v - theta, 0) for a single threshold
        theta = np.mean((v - p)[p > 0])
        assert np.allclose(p, np.maximum(v - theta, 0.0), atol=1e-9 * max(1.0, np.abs(v).max()))


class TestLeastSquares:
    def test_identity(self):
        r = solve_least_squares(RegressionSystem(np.eye(3), np.array([0.2, 0.3, 0.5])), LS)
        assert r.proportions.tolist() == pytest.approx([0.2, 0.3, 0.5], abs=1e-7)
        assert r.loss_value == pytest.approx(0, abs=1e-12) and r.converged

    def test_exact_fit(self):
        r = solve_least_squares(system([(0.9, 0.1), (0.2, 0.8)], (0.55, 0.45)), LS)
        assert r.proportions.tolist() == pytest.approx([0.5, 0.5], abs=1e-6)
        assert r.loss_value < 1e-12

    def test_identical_columns_flagged(self):
        r = solve_least_squares(system([(0.6, 0.4), (0.6, 0.4)], (0.6, 0.4)), LS)
        assert r.non_unique
        assert r.loss_value < 1e-12

    def test_binary_clips_to_zero(self):
        tpr, fpr, p = 0.8, 0.2, 0.1
        r = solve_least_squares(system([(tpr, 1 - tpr), (fpr, 1 - fpr)], (p, 1 - p)), LS)
        assert r.proportions[0] == pytest.approx(0.0, abs=1e-7)
        best, _ = grid_argmin(np.array([[tpr, fpr], [1 - tpr, 1 - fpr]]), np.array([p, 1 - p]), 0)
        assert r.proportions[0] == pytest.approx(best[0], abs=1e-3)

    def test_history_non_increasing(self, rng):
        for _ in range(30):
            s = random_system(rng, 3, 8)
            r = solve_least_squares(s, LS)
            assert np.all(np.diff(r.history) <= 1e-15)

    def test_scale_invariance(self, rng):
        for _ in range(30):
            s = random_system(rng, 3, 6)
            a = solve_least_squares(s, LS).proportions.values
            b = solve_least_squares(s.scaled(7.5), LS).proportions.values
            assert np.abs(a - b).max() <= 1e-8

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_binary_equivalence(self, tpr, fpr, p):
        if abs(tpr - fpr) <= 0.05:
            return
        r = solve_least_squares(system([(tpr, 1 - tpr), (fpr, 1 - fpr)], (p, 1 - p)), LS)
        assert r.proportions[0] == pytest.approx(binary_adjusted_count(p, tpr, fpr), abs=1e-6)

    def test_weights(self):
        # heavy weight on the first row pulls the fit toward it
        X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([0.9, 0.5, 0.1])
        plain = solve_least_squares(RegressionSystem(X, y), LS).proportions[0]
        heavy = solve_least_squares(RegressionSystem(X, y, np.array([100.0, 1.0, 1.0])), LS).proportions[0]
        assert heavy > plain


class TestLeastAbsoluteDeviation:
    def test_identity(self):
        r = solve_least_absolute_deviation(RegressionSystem(np.eye(2), np.array([0.7, 0.3])), LAD)
        assert r.proportions.tolist() == pytest.approx([0.7, 0.3], abs=1e-12)
        assert r.loss_value == pytest.approx(0, abs=1e-12)

    def test_vertex(self):
        r = solve_least_absolute_deviation(system([(0.6, 0.4), (0.5, 0.5)], (0.9, 0.1)), LAD)
        assert r.proportions.tolist() == pytest.approx([1.0, 0.0], abs=1e-12)
        assert r.loss_value == pytest.approx(0.6, abs=1e-12)

    def test_exact_fit(self):
        r = solve_least_absolute_deviation(system([(0.9, 0.1), (0.2, 0.8)], (0.55, 0.45)), LAD)
        assert r.proportions.tolist() == pytest.approx([0.5, 0.5], abs=1e-12)

    def _linprog_value(self, X, y, w):
        m, k = X.shape
        c = np.concatenate([np.zeros(k), w, w])
        A_eq = np.vstack([np.hstack([X, np.eye(m), -np.eye(m)]), np.concatenate([np.ones(k), np.zeros(2 * m)])])
        b_eq = np.concatenate([y, [1.0]])
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        assert res.status == 0
        return res.fun

    def test_matches_linprog(self, rng):
        for _ in range(100):
            k = int(rng.integers(2, 8))
            m = int(rng.integers(2, 40))
            X = rng.random((m, k))
            y = rng.random(m)
            w = rng.random(m) + 0.1
            r = solve_least_absolute_deviation(RegressionSystem(X, y, w), LAD)
            assert r.loss_value == pytest.approx(self._linprog_value(X, y, w), abs=1e-9)

    def test_degenerate_ties(self):
        # many identical rows make heavily degenerate pivots
        X = np.tile([[0.5, 0.5, 0.2], [0.5, 0.5, 0.8]], (20, 1))
        y = np.tile([0.5, 0.5], 20)
        r = solve_least_absolute_deviation(RegressionSystem(X, y), LAD)
        assert r.loss_value == pytest.approx(self._linprog_value(X, y, np.ones(40)), abs=1e-9)

    def test_pivot_limit_raises(self):
        from simplexquant import solvers

        with pytest.raises(SolverFailure, match="pivot limit"):
            solvers._lad_simplex(np.eye(3), np.array([0.2, 0.3, 0.5]), np.ones(3), 0)


class TestHellinger:
    def test_identity(self):
        r = solve_hellinger(RegressionSystem(np.eye(3), np.array([0.1, 0.2, 0.7])), HEL)
        assert r.proportions.tolist() == pytest.approx([0.1, 0.2, 0.7], abs=1e-6)
        assert r.loss_value < 1e-10

    def test_zero_cell(self):
        r = solve_hellinger(RegressionSystem(np.eye(2), np.array([1.0, 0.0])), HEL)
        assert r.proportions.tolist() == pytest.approx([1.0, 0.0], abs=1e-6)

    def test_exact_fit(self):
        r = solve_hellinger(system([(0.7, 0.3), (0.1, 0.9)], (0.4, 0.6)), HEL)
        assert r.proportions.tolist() == pytest.approx([0.5, 0.5], abs=1e-6)
        best, _ = grid_argmin(np.array([[0.7, 0.1], [0.3, 0.9]]), np.array([0.4, 0.6]), 2)
        assert r.proportions.tolist() == pytest.approx(best, abs=1e-3)

    def test_negative_rejected(self):
        with pytest.raises(InvalidSystemError):
            solve_hellinger(RegressionSystem(np.array([[1.0, -0.1], [0.0, 1.1]]), np.array([0.5, 0.5])), HEL)

    def test_floor_zero_guarded(self):
        # y puts mass where one column is zero; the gradient stays finite at floor 0
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        r = solve_hellinger(RegressionSystem(X, np.array([0.3, 0.7])), SolverConfig(Loss.HELLINGER, hellinger_floor=0.0))
        assert np.all(np.isfinite(r.proportions.values))
        assert r.proportions.tolist() == pytest.approx([0.3, 0.7], abs=1e-6)

    def test_floor_sensitivity(self, rng):
        for _ in range(30):
            s = random_system(rng, 3, 10)
            a = solve_hellinger(s, SolverConfig(Loss.HELLINGER, hellinger_floor=1e-12)).proportions.values
            b = solve_hellinger(s, SolverConfig(Loss.HELLINGER, hellinger_floor=1e-10)).proportions.values
            assert np.abs(a - b).max() <= 1e-5

    def test_converges(self, rng):
        for _ in range(30):
            s = random_system(rng, 4, 20)
            assert solve_hellinger(s, HEL).converged


class TestOracleEquivalence:
    @pytest.mark.parametrize("loss_index,config", [(0, LS), (1, LAD), (2, HEL)])
    def test_grid_oracle(self, rng, loss_index, config):
        for _ in range(25):
            k = int(rng.integers(2, 4))
            s = random_system(rng, k, int(rng.integers(2, 13)))
            r = solve(s, config)
            _, best = grid_argmin(s.design, s.target, loss_index)
            assert r.loss_value <= best + 1e-4

    def test_loss_value_matches_objective(self, rng):
        s = random_system(rng, 3, 7)
        for cfg in (LS, LAD, HEL):
            r = solve(s, cfg)
            assert r.loss_value == pytest.approx(objective(s, r.proportions, cfg.loss), abs=1e-15)
            assert np.allclose(r.residual, s.target - s.design @ r.proportions.values, atol=1e-9)


class TestNonUnique:
    def test_full_rank(self):
        assert not is_non_unique(np.eye(3))

    def test_affine_dependence(self):
        # third column is the average of the first two: a line of optima on the simplex
        X = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]])
        assert is_non_unique(X)


class TestBinaryAdjustedCount:
    @pytest.mark.parametrize("p,tpr,fpr,expected", [(0.5, 0.9, 0.1, 0.5), (0.1, 0.8, 0.2, 0.0), (0.44, 0.8, 0.2, 0.4)])
    def test_examples(self, p, tpr, fpr, expected):
        assert binary_adjusted_count(p, tpr, fpr) == pytest.approx(expected, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateClassifierError):
            binary_adjusted_count(0.5, 0.3, 0.3)

    def test_range(self):
        with pytest.raises(RangeError):
            binary_adjusted_count(1.5, 0.8, 0.2)
