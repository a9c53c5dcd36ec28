"""The compiled and numpy kernels must agree."""
import numpy as np
import pytest

from simplexquant import _backend
from simplexquant.core import RegressionSystem
from simplexquant.solvers import Loss, SolverConfig, solve

py = _backend.python_kernels
cy = _backend.compiled_kernels
needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_get_kernels():
    assert _backend.get_kernels("python") is py
    assert _backend.get_kernels() is _backend.kernels
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


def test_backend_name():
    assert _backend.BACKEND == ("cython" if cy is not None else "python")


@needs_cy
def test_projection_agrees(rng):
    for _ in range(200):
        v = rng.normal(size=int(rng.integers(2, 20))) * 3
        assert np.allclose(py.project_simplex(v), cy.project_simplex(v), atol=1e-14)


@needs_cy
@pytest.mark.parametrize("loss", [Loss.LEAST_SQUARES, Loss.HELLINGER, Loss.LEAST_ABSOLUTE_DEVIATION])
def test_solutions_agree(rng, loss):
    for _ in range(40):
        k = int(rng.integers(2, 7))
        m = int(rng.integers(2, 60))
        X = rng.dirichlet(np.ones(m), size=k).T
        y = rng.dirichlet(np.ones(m))
        s = RegressionSystem(X, y)
        a = solve(s, SolverConfig(loss, backend="python"))
        b = solve(s, SolverConfig(loss, backend="cython"))
        assert a.converged and b.converged
        assert abs(a.loss_value - b.loss_value) <= 1e-10
        assert np.abs(a.proportions.values - b.proportions.values).max() <= 1e-6


@needs_cy
def test_ls_trajectories_match(rng):
    X = rng.dirichlet(np.ones(8), size=3).T
    y = rng.dirichlet(np.ones(8))
    D = 2 * X.T @ X
    d = -2 * X.T @ y
    x0 = np.full(3, 1 / 3)
    # same arithmetic in both; near the rounding floor the stopping iteration may differ
    ra = py.ls_apg(D, d, x0, 10.0, 1e-6, 5000)
    rb = cy.ls_apg(D, d, x0, 10.0, 1e-6, 5000)
    assert ra[1] == rb[1]
    assert np.allclose(ra[3], rb[3], atol=1e-12)
    assert np.allclose(ra[0], rb[0], atol=1e-12)
