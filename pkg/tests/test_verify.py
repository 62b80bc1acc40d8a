import pytest

from qadsim.verify import (
    SUITES,
    bounds_suite,
    equivalence_suite,
    flaws_suite,
    random_instance,
    run_suite,
    scaling_suite,
)


class TestRandomInstance:
    def test_shapes_and_ranges(self):
        for seed in range(10):
            data, query = random_instance(seed)
            assert 2 <= data.n_rows <= 8
            assert 1 <= data.n_cols <= 4
            assert query.real_values.shape == (data.n_cols,)
            assert abs(data.values).max() <= 2.0

    def test_deterministic(self):
        d1, q1 = random_instance(7)
        d2, q2 = random_instance(7)
        assert (d1.values == d2.values).all()
        assert (q1.real_values == q2.real_values).all()


class TestSuites:
    def test_bounds(self):
        report = bounds_suite(seeds=20)
        assert report["passed"]
        assert report["instances"] == 20
        assert report["failures"] == []

    def test_equivalence(self):
        report = equivalence_suite()
        assert report["passed"]
        assert report["max_deviation"] <= 1e-12

    def test_scaling(self):
        report = scaling_suite()
        assert report["passed"]
        assert abs(report["slope"] - 1.0) <= 0.05
        assert report["grover_counts"] == [(1 << t) - 1 for t in report["t_values"]]

    def test_flaws(self):
        report = flaws_suite()
        assert report["passed"]
        assert abs(report["m2_gap"] - 2.0) <= 1e-9
        assert report["normalization_discrepancy"] > 0.01


class TestDispatcher:
    def test_known_suites(self):
        assert set(SUITES) == {"bounds", "equivalence", "scaling", "flaws"}

    def test_dispatch(self):
        report = run_suite("flaws")
        assert report["suite"] == "flaws"

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("nope")
