import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from simplexquant.core import (
    Dataset,
    ProbabilityMatrix,
    ProbSource,
    ProportionVector,
    RegressionSystem,
    make_proportion,
    naive_estimate,
)
from simplexquant.errors import ContractError, DegenerateClassError, DegenerateInputError, NumericError


class TestProportionVector:
    def test_valid(self):
        p = ProportionVector([0.2, 0.3, 0.5])
        assert len(p) == 3 and p[2] == 0.5
        assert p.tolist() == [0.2, 0.3, 0.5]

    @pytest.mark.parametrize("bad", [[1.0], [0.6, 0.6], [1.2, -0.2], [np.nan, 1.0]])
    def test_rejects(self, bad):
        with pytest.raises((ContractError, DegenerateInputError, NumericError)):
            ProportionVector(bad)

    def test_read_only(self):
        p = ProportionVector([0.5, 0.5])
        with pytest.raises(ValueError):
            p.values[0] = 1.0

    def test_equality_and_hash(self):
        assert ProportionVector([0.5, 0.5]) == ProportionVector([0.5, 0.5])
        assert hash(ProportionVector([0.5, 0.5])) == hash(ProportionVector([0.5, 0.5]))


class TestMakeProportion:
    def test_on_simplex(self):
        assert make_proportion([0.2, 0.3, 0.5]).tolist() == pytest.approx([0.2, 0.3, 0.5], abs=1e-15)

    def test_renormalizes(self):
        assert make_proportion([2, 2]).tolist() == [0.5, 0.5]

    def test_clamps_noise(self):
        assert make_proportion([1, 0, -1e-13]).tolist() == [1.0, 0.0, 0.0]

    @pytest.mark.parametrize("raw", [[0, 0], [1, -0.5], [-1, -1]])
    def test_degenerate(self, raw):
        with pytest.raises(DegenerateInputError):
            make_proportion(raw)

    @given(arrays(float, st.integers(2, 8), elements=st.floats(0, 1e6)))
    def test_idempotent(self, raw):
        if raw.sum() <= 0:
            return
        p = make_proportion(raw)
        assert abs(p.values.sum() - 1.0) <= 1e-9
        assert make_proportion(p.values) == p


class TestNaiveEstimate:
    @pytest.mark.parametrize(
        "rows,expected",
        [
            ([[1, 0], [0, 1]], [0.5, 0.5]),
            ([[0.6, 0.4], [0.8, 0.2]], [0.7, 0.3]),
            ([[0.3, 0.3, 0.4]], [0.3, 0.3, 0.4]),
        ],
    )
    def test_examples(self, rows, expected):
        est = naive_estimate(ProbabilityMatrix(np.array(rows, float), ProbSource.EXTERNAL))
        assert est.tolist() == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=50)
    @given(st.integers(1, 20), st.integers(2, 6), st.integers(0, 2**31))
    def test_on_simplex(self, n, k, seed):
        P = np.random.default_rng(seed).dirichlet(np.ones(k), size=n)
        est = naive_estimate(ProbabilityMatrix(P, ProbSource.EXTERNAL))
        assert np.all(est.values >= 0) and abs(est.values.sum() - 1) <= 1e-9


class TestProbabilityMatrix:
    def test_row_sum_tolerance(self):
        ProbabilityMatrix(np.array([[0.5, 0.5 + 5e-7]]), ProbSource.EXTERNAL)
        with pytest.raises(ContractError):
            ProbabilityMatrix(np.array([[0.5, 0.51]]), ProbSource.EXTERNAL)

    def test_argmax_tie_lowest(self):
        P = ProbabilityMatrix(np.array([[0.4, 0.4, 0.2]]), ProbSource.EXTERNAL)
        assert P.argmax().tolist() == [0]


class TestDataset:
    def test_binary_inferred(self):
        assert Dataset(np.array([[0, 1], [1, 1]]), [0, 1], ("a", "b")).binary_features
        assert not Dataset(np.array([[0.5, 1]]), None, ()).binary_features

    def test_binary_flag_checked(self):
        with pytest.raises(ContractError):
            Dataset(np.array([[0.5, 1]]), None, (), True)

    def test_label_range(self):
        with pytest.raises(ContractError):
            Dataset(np.ones((2, 1)), [0, 2], ("a", "b"))

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            Dataset(np.ones((0, 3)))

    def test_missing_class_detected(self):
        d = Dataset(np.ones((2, 1)), [0, 0], ("a", "b"))
        with pytest.raises(DegenerateClassError):
            d.require_all_classes()

    def test_proportions(self):
        d = Dataset(np.ones((4, 1)), [0, 1, 1, 1], ("a", "b"))
        assert d.proportions().tolist() == [0.25, 0.75]


class TestRegressionSystem:
    def test_shape_checks(self):
        with pytest.raises(ContractError):
            RegressionSystem(np.eye(2), np.ones(3))

    def test_distribution_blocks(self):
        RegressionSystem(np.eye(2), np.array([0.5, 0.5]), blocks=((0, 2),), distribution=True)
        with pytest.raises(ContractError):
            RegressionSystem(np.eye(2) * 0.5, np.array([0.5, 0.5]), blocks=((0, 2),), distribution=True)

    def test_residual(self):
        s = RegressionSystem(np.eye(2), np.array([0.7, 0.3]))
        assert s.residual([0.5, 0.5]).tolist() == pytest.approx([0.2, -0.2])
