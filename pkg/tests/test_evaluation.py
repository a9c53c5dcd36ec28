import json
import math

import numpy as np
import pytest

from simplexquant.core import ProportionVector
from simplexquant.errors import ConfigError, ContractError, PoolExhaustedError
from simplexquant.evaluation import (
    ScenarioKind,
    ScenarioSpec,
    apportion,
    dirichlet_walk,
    enumerate_grid,
    grid_size,
    mad,
    materialize_test,
    run_suite,
    sample_grid,
)
from simplexquant.quantifiers import QuantifierConfig


class TestGrid:
    def test_small(self):
        assert [p.tolist() for p in enumerate_grid(2, 0.5)] == [[0, 1], [0.5, 0.5], [1, 0]]

    @pytest.mark.parametrize("k", range(2, 8))
    @pytest.mark.parametrize("step", [0.5, 0.25, 0.2, 0.1])
    def test_counts(self, k, step):
        n = round(1 / step)
        assert len(enumerate_grid(k, step)) == math.comb(n + k - 1, k - 1) == grid_size(k, step)

    @pytest.mark.parametrize("k", [8, 9, 10])
    def test_counts_large(self, k):
        for step in (0.5, 0.25, 0.2):
            assert len(enumerate_grid(k, step)) == math.comb(round(1 / step) + k - 1, k - 1)

    def test_lexicographic_and_valid(self):
        g = [tuple(p.tolist()) for p in enumerate_grid(4, 0.25)]
        assert g == sorted(g) and len(set(g)) == len(g)
        for p in g:
            assert min(p) >= 0 and abs(sum(p) - 1) <= 1e-9

    def test_bad_step(self):
        with pytest.raises(ConfigError):
            enumerate_grid(3, 0.3)
        with pytest.raises(ConfigError):
            ScenarioSpec("grid", step=0.15)


class TestSampleGrid:
    def test_full_permutation(self):
        full = {tuple(p.tolist()) for p in enumerate_grid(3, 0.25)}
        s = sample_grid(3, 0.25, len(full), 7)
        assert {tuple(p.tolist()) for p in s} == full

    def test_deterministic(self):
        assert sample_grid(4, 0.1, 30, 3) == sample_grid(4, 0.1, 30, 3)
        assert sample_grid(4, 0.1, 30, 3) != sample_grid(4, 0.1, 30, 4)

    def test_k10(self):
        s = sample_grid(10, 0.1, 1001, 0)
        assert len({tuple(p.tolist()) for p in s}) == 1001

    def test_too_many(self):
        with pytest.raises(ConfigError):
            sample_grid(2, 0.5, 4, 0)


class TestWalk:
    def test_high_concentration_stays(self):
        start = ProportionVector([0.2, 0.3, 0.5])
        for seed in range(100):
            for p in dirichlet_walk(start, 3, 1e6, seed):
                assert np.abs(p.values - start.values).max() < 0.01

    def test_single_step(self):
        w = dirichlet_walk(ProportionVector([0.5, 0.5]), 1, 50, 0)
        assert len(w) == 1 and abs(w[0].values.sum() - 1) <= 1e-9

    def test_mean(self):
        start = ProportionVector([0.5, 0.5])
        draws = np.array([dirichlet_walk(start, 1, 50, s)[0].values for s in range(10_000)])
        assert np.abs(draws.mean(axis=0) - 0.5).max() < 0.02

    def test_zero_start_floored(self):
        w = dirichlet_walk(ProportionVector([1.0, 0.0, 0.0]), 20, 50, 1)
        assert all(abs(p.values.sum() - 1) <= 1e-9 for p in w)

    def test_deterministic(self):
        s = ProportionVector([0.3, 0.7])
        assert dirichlet_walk(s, 5, 50, 9) == dirichlet_walk(s, 5, 50, 9)

    def test_spec(self):
        spec = ScenarioSpec(ScenarioKind.DIRICHLET_WALK, sample_count=4, rng_seed=2)
        assert len(spec.generate(2, ProportionVector([0.5, 0.5]))) == 4
        with pytest.raises(ConfigError):
            ScenarioSpec("dirichlet_walk", walk_concentration=0)


class TestMaterialize:
    def test_degenerate_target(self, random3):
        pool = random3[1]
        t = materialize_test(pool, ProportionVector([1, 0, 0]), 10, 0)
        assert t.n_rows == 10 and np.all(t.labels == 0)

    def test_tie_goes_low(self):
        assert apportion(ProportionVector([0.5, 0.5]), 11).tolist() == [6, 5]

    def test_rounding_bound(self, random3):
        pool = random3[1]
        target = ProportionVector([0.123, 0.456, 0.421])
        t = materialize_test(pool, target, 97, 3)
        assert np.abs(t.proportions().values - target.values).max() < 1 / 97

    def test_exhausted(self, random3):
        with pytest.raises(PoolExhaustedError, match="c0"):
            materialize_test(random3[1], ProportionVector([1, 0, 0]), 401, 0)

    def test_deterministic(self, random3):
        a = materialize_test(random3[1], ProportionVector([0.2, 0.3, 0.5]), 50, 5)
        b = materialize_test(random3[1], ProportionVector([0.2, 0.3, 0.5]), 50, 5)
        assert a == b


class TestMad:
    def test_examples(self):
        assert mad([0.5, 0.5], [0.5, 0.5]) == 0
        assert mad([0.5, 0.5], [0.7, 0.3]) == pytest.approx(0.2)
        assert mad([1, 0, 0], [0, 1, 0]) == pytest.approx(2 / 3)

    def test_mismatch(self):
        with pytest.raises(ContractError):
            mad([0.5, 0.5], [1, 0, 0])


class TestSuite:
    def test_no_shift(self, separable3):
        tr, pool = separable3
        methods = [QuantifierConfig(m) for m in ("Prob", "AC", "MM", "HDy", "HDx")]
        rep = run_suite(tr, pool, ScenarioSpec(), methods, 600, proportions=[tr.proportions()])
        naive_acc = rep.per_case[0].naive_accuracy
        for m in rep.methods:
            assert rep.per_case[0].mad[m] < 0.03
            assert abs(rep.per_case[0].accuracy[m] - naive_acc) <= 0.01

    def test_vertex_truth(self, random3):
        tr, pool = random3
        rep = run_suite(tr, pool, ScenarioSpec(), [], 100, proportions=[ProportionVector([1, 0, 0])])
        assert rep.per_case[0].truth_accuracy == 1.0

    def test_empty_methods(self, random3):
        tr, pool = random3
        rep = run_suite(tr, pool, ScenarioSpec("grid", step=0.5), [], 60)
        assert set(rep.aggregates) == {"Naive", "Truth"}
        assert len(rep.per_case) == 6

    def test_invariants_and_json(self, random3):
        tr, pool = random3
        methods = [QuantifierConfig(m) for m in ("Prob", "MM")]
        rep = run_suite(tr, pool, ScenarioSpec("grid_sample", step=0.1, sample_count=5, rng_seed=1), methods, 80)
        for c in rep.per_case:
            assert all(v >= 0 for v in c.mad.values()) and c.naive_mad >= 0
            assert all(0 <= v <= 1 for v in c.accuracy.values())
            assert 0 <= c.truth_accuracy <= 1
        data = json.loads(rep.to_json())
        assert len(data["cases"]) == 5
        assert rep.to_csv().count("\n") == 1 + 5 * 4

    def test_deterministic_with_threads(self, random3):
        tr, pool = random3
        methods = [QuantifierConfig(m) for m in ("Prob", "HDy")]
        spec = ScenarioSpec("grid", step=0.5)
        a = run_suite(tr, pool, spec, methods, 60, jobs=1).to_json()
        b = run_suite(tr, pool, spec, methods, 60, jobs=4).to_json()
        assert a == b

    def test_method_failure_recorded(self, random3):
        tr, pool = random3
        # non-binary features make HDx fail; the suite keeps going
        from simplexquant.core import Dataset

        noisy_tr = Dataset(tr.features + 0.5, tr.labels, tr.class_names)
        noisy_pool = Dataset(pool.features + 0.5, pool.labels, pool.class_names)
        rep = run_suite(noisy_tr, noisy_pool, ScenarioSpec("grid", step=0.5),
                        [QuantifierConfig("HDx"), QuantifierConfig("Prob")], 60)
        assert rep.error_count == 6
        assert all("HDx" in c.errors and "Prob" in c.mad for c in rep.per_case)

    def test_duplicate_labels(self, random3):
        with pytest.raises(ConfigError):
            run_suite(*random3, ScenarioSpec(), [QuantifierConfig("Prob"), QuantifierConfig("Prob")], 10)
