"""Tests for dispersal kernels and the kernel matrix."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_spectra.core.exceptions import GridTooCoarse, InvalidParameter
from nonlocal_spectra.core.geometry import build_domain
from nonlocal_spectra.core.kernel import (
    KernelFamily,
    build_kernel_matrix,
    eval_kernel,
    make_kernel,
    quadrature_mass,
)


@pytest.mark.parametrize("family", [f.value for f in KernelFamily])
def test_kernels_have_unit_mass(family):
    kernel = make_kernel(family, shift=0.2 if family == "skewed_epanechnikov1d" else 0.0)
    assert quadrature_mass(kernel, points_per_axis=400) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("family", [f.value for f in KernelFamily])
def test_kernels_positive_at_origin_and_vanish_outside_support(family):
    kernel = make_kernel(family, shift=0.2 if family == "skewed_epanechnikov1d" else 0.0)
    origin = np.zeros(kernel.dimension)
    outside = np.full(kernel.dimension, 2.0 * kernel.support_radius)
    assert eval_kernel(kernel, origin) > 0
    assert eval_kernel(kernel, outside) == 0


def test_skewed_kernel_is_not_even():
    kernel = make_kernel("skewed_epanechnikov1d", shift=0.3)
    assert not kernel.even
    assert kernel.support_radius == pytest.approx(1.3)
    assert eval_kernel(kernel, 0.5) != pytest.approx(float(eval_kernel(kernel, -0.5)))


def test_make_kernel_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        make_kernel("gaussian")
    with pytest.raises(InvalidParameter):
        make_kernel("tent1d", gamma=0.0)
    with pytest.raises(InvalidParameter):
        make_kernel("skewed_epanechnikov1d", gamma=1.0, shift=0.6)


@settings(max_examples=25, deadline=None)
@given(z=st.floats(min_value=-2, max_value=2), family=st.sampled_from(["epanechnikov1d", "tent1d"]))
def test_symmetric_1d_kernels_are_even(z, family):
    kernel = make_kernel(family)
    assert float(eval_kernel(kernel, z)) == pytest.approx(float(eval_kernel(kernel, -z)))


def test_kernel_matrix_is_symmetric_and_neumann_part_annihilates_constants():
    domain = build_domain(1, [(0.0, 1.0)], [50])
    km = build_kernel_matrix(domain, make_kernel("epanechnikov1d"), 0.3)
    K = km.dense()
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    np.testing.assert_allclose(km.neumann_part() @ np.ones(50), 0.0, atol=1e-13)
    np.testing.assert_allclose(km.degree, K.sum(axis=1))


def test_degree_is_one_in_the_interior_and_smaller_near_the_boundary():
    domain = build_domain(1, [(0.0, 1.0)], [200])
    km = build_kernel_matrix(domain, make_kernel("epanechnikov1d"), 0.1)
    middle = domain.size // 2
    assert km.degree[middle] == pytest.approx(1.0, abs=1e-3)
    assert km.degree[0] < 0.6
    assert np.all(km.dirichlet_part() @ np.ones(200) <= 1e-12)


def test_2d_radial_bump_matrix():
    domain = build_domain(2, [(0.0, 1.0), (0.0, 1.0)], [12, 12])
    km = build_kernel_matrix(domain, make_kernel("radial_bump2d"), 0.5)
    assert km.size == 144
    assert np.all(km.K.data > 0)
    assert km.degree.max() <= 1.0 + 5e-2


def test_grid_too_coarse_reports_required_cells():
    domain = build_domain(1, [(0.0, 1.0)], [4])
    with pytest.raises(GridTooCoarse) as info:
        build_kernel_matrix(domain, make_kernel("epanechnikov1d"), 0.1)
    assert info.value.min_cells[0] >= 10
    assert info.value.to_dict()["type"] == "GridTooCoarse"


def test_dimension_mismatch_rejected():
    domain = build_domain(1, [(0.0, 1.0)], [10])
    with pytest.raises(InvalidParameter):
        build_kernel_matrix(domain, make_kernel("radial_bump2d"), 1.0)
