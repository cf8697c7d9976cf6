"""Tests for dispersal-rate and dispersal-range sweeps."""
import numpy as np
import pytest

from nonlocal_spectra.core.asymptotics import (
    ordered_values,
    range_references,
    refined_spec,
    run_points,
    small_dispersal_bracket,
    sweep_dispersal_range,
    sweep_dispersal_ranges,
    sweep_dispersal_rate,
    verify_upper_bound,
)
from nonlocal_spectra.core.coefficient import build_coefficient
from nonlocal_spectra.core.exceptions import (
    IncompatibleLimit,
    InvalidParameter,
    KernelNotSymmetric,
    TooLarge,
)
from nonlocal_spectra.core.geometry import build_domain
from nonlocal_spectra.core.kernel import make_kernel
from nonlocal_spectra.core.operator import OperatorSpec
from nonlocal_spectra.utils.test_utils import random_autonomous_spec, random_periodic_spec


class TestParameterValues:
    def test_descending_values_are_reversed(self):
        np.testing.assert_allclose(ordered_values([1e-1, 1e-2, 1e-3], "D"), [1e-3, 1e-2, 1e-1])

    @pytest.mark.parametrize("values", [[], [1.0, 0.5, 2.0], [1.0, 1.0], [0.0, 1.0], [-1.0]])
    def test_bad_values_rejected(self, values):
        with pytest.raises(InvalidParameter):
            ordered_values(values, "D")

    def test_run_points_keeps_order(self):
        assert run_points(lambda v: v * v, [3.0, 1.0, 2.0], jobs=3) == [9.0, 1.0, 4.0]


class TestDispersalRate:
    def test_small_rate_approaches_max_time_average(self, separable_spec):
        sweep = sweep_dispersal_rate(separable_spec, [1e-1, 1e-2, 1e-3, 1e-4])
        gaps = sweep.gaps["neg_max_aT"]
        assert np.all(np.diff(gaps) > 0)
        assert gaps[0] < 5e-3
        assert sweep.gap_monotone["neg_max_aT"]
        assert not sweep.failures

    def test_large_rate_approaches_space_time_average(self, separable_spec):
        sweep = sweep_dispersal_rate(separable_spec, [1.0, 1e2, 1e4])
        gaps = sweep.gaps["neg_spacetime_avg"]
        assert np.all(np.diff(gaps) < 0)
        assert gaps[-1] < 5e-2
        assert sweep.gap_monotone["neg_spacetime_avg"]

    def test_order_of_values_does_not_matter(self, separable_spec):
        up = sweep_dispersal_rate(separable_spec, [0.1, 1.0, 10.0], jobs=1)
        down = sweep_dispersal_rate(separable_spec, [10.0, 1.0, 0.1], jobs=2)
        np.testing.assert_array_equal(up.lambda1, down.lambda1)
        assert up.rows() == down.rows()

    def test_rows_and_upper_bound_margin(self, separable_spec):
        sweep = sweep_dispersal_rate(separable_spec, [0.5, 2.0])
        row = sweep.rows()[0]
        assert set(row) == {
            "param", "lambda1", "lambda_star", "is_principal",
            "gap_neg_max_aT", "gap_neg_spacetime_avg",
        }
        assert all(p.upper_bound_margin >= -1e-6 for p in sweep.points)
        assert sweep.to_dict()["parameter"] == "D"

    def test_sandwich_along_the_sweep(self):
        spec = random_periodic_spec(21)
        sweep = sweep_dispersal_rate(spec, [0.01, 0.1, 1.0, 10.0])
        fine = spec.coeff.sample(np.arange(1024) / 1024, spec.domain.points)
        assert np.all(sweep.lambda1 >= -fine.max() - 1e-6)
        assert np.all(sweep.lambda1 <= -fine.min() + 1e-6)


class TestUpperBound:
    def test_random_symmetric_specs(self):
        for seed in range(10):
            spec = random_autonomous_spec(400 + seed)
            assert verify_upper_bound(spec) >= -1e-6
            spec = random_periodic_spec(500 + seed)
            assert verify_upper_bound(spec) >= -1e-6

    def test_needs_symmetric_kernel(self, unit_interval, separable_coeff):
        spec = OperatorSpec(
            domain=unit_interval,
            kernel=make_kernel("skewed_epanechnikov1d", shift=0.2),
            coeff=separable_coeff,
            D=1.0,
            sigma=1.0,
        )
        with pytest.raises(KernelNotSymmetric):
            verify_upper_bound(spec)


class TestSmallDispersalBracket:
    def test_bracket_holds_for_small_rates(self, separable_spec):
        bracket = small_dispersal_bracket(separable_spec, 1e-2, [1e-4, 1e-3, 1e-2])
        assert all(bracket.lower_holds) and all(bracket.upper_holds)
        assert bracket.D_epsilon == pytest.approx(1e-2)
        assert bracket.lower == pytest.approx(-separable_spec.stats.max_aT - 1e-2)

    def test_epsilon_must_be_positive(self, separable_spec):
        with pytest.raises(InvalidParameter):
            small_dispersal_bracket(separable_spec, 0.0, [1e-3])


class TestDispersalRange:
    def test_references_by_setting(self, separable_spec):
        refs = range_references(separable_spec, 0.0)
        assert [(r.name, r.end) for r in refs] == [("neg_max_aT", "both")]
        refs = range_references(separable_spec, 1.0)
        assert [(r.name, r.end) for r in refs] == [("neg_max_aT", "large")]
        with pytest.raises(IncompatibleLimit):
            range_references(separable_spec, 3.0, ["neg_space_avg"])
        with pytest.raises(InvalidParameter):
            range_references(separable_spec, 0.0, ["neg_min_aT"])

    def test_refinement_keeps_kernel_resolved(self, separable_spec):
        spec = refined_spec(separable_spec, 0.05, 0.0)
        assert spec.domain.h <= spec.kernel.support_radius * 0.05 / 4 + 1e-12
        with pytest.raises(TooLarge):
            refined_spec(separable_spec, 0.001, 0.0, max_points=500)

    def test_unrefined_points_fail_and_sweep_continues(self, separable_spec):
        sweep = sweep_dispersal_range(separable_spec, [0.01, 1.0], 0.0, refine=False)
        assert len(sweep.failures) == 1
        assert sweep.failures[0].error["type"] == "GridTooCoarse"
        assert sweep.points[1].ok
        assert sweep.rows()[0]["lambda1"] is None
        assert not sweep.gap_monotone["neg_max_aT"]

    def test_large_range_approaches_max_time_average(self, separable_spec):
        sweeps = sweep_dispersal_ranges(separable_spec, [5.0, 10.0, 25.0, 50.0], [0.0, 1.0, 2.0])
        for sweep in sweeps:
            gaps = sweep.gaps["neg_max_aT"]
            assert np.all(np.diff(gaps) < 0), sweep.k
            assert gaps[-1] < 2e-2

    @pytest.mark.slow
    def test_small_range_approaches_max_time_average(self, separable_spec):
        sweep = sweep_dispersal_range(separable_spec, [0.4, 0.2, 0.1, 0.05], 0.0)
        gaps = sweep.gaps["neg_max_aT"]
        assert np.all(np.diff(gaps) > 0)
        assert gaps[0] < 5e-2
        assert sweep.gap_monotone["neg_max_aT"]
        assert sweep.points[0].cells[0] >= 80

    @pytest.mark.slow
    def test_small_range_averages_in_two_dimensions(self):
        spec = OperatorSpec(
            domain=build_domain(2, [(0.0, 1.0), (0.0, 1.0)], [20, 20]),
            kernel=make_kernel("radial_bump2d"),
            coeff=build_coefficient("space_only", b="cos(pi*x)*cos(pi*y)"),
            D=1.0,
            sigma=0.4,
            k=3.0,
        )
        sweep = sweep_dispersal_range(spec, [0.4, 0.2, 0.1], 3.0, references=["neg_space_avg"])
        assert [r.name for r in sweep.references] == ["neg_space_avg"]
        assert sweep.references[0].value == pytest.approx(0.0, abs=1e-12)
        gaps = sweep.gaps["neg_space_avg"]
        assert np.all(np.diff(gaps) > 0)
        assert gaps[0] < 5e-2
