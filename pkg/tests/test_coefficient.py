"""Tests for expression parsing and T-periodic coefficients."""
import numpy as np
import pytest
import sympy as sp

from nonlocal_spectra.core.coefficient import (
    CoefficientForm,
    build_coefficient,
    constant_coefficient,
    tabulated_coefficient,
    time_average,
)
from nonlocal_spectra.core.exceptions import ExpressionError, InvalidParameter, ShapeMismatch
from nonlocal_spectra.core.expressions import (
    T,
    X,
    compile_expression,
    depends_on_space,
    depends_on_time,
    parse_expression,
)
from nonlocal_spectra.core.geometry import build_domain


class TestExpressions:
    def test_parses_allowed_grammar(self):
        expr = parse_expression("1 + cos(pi*x)*exp(-y) + 0.5*sin(2*pi*t)**2")
        assert depends_on_time(expr)
        assert depends_on_space(expr)
        f = compile_expression(expr)
        assert f(0.25, 0.0, 0.0) == pytest.approx(1.0 + 1.0 + 0.5)

    def test_numbers_pass_through(self):
        assert parse_expression(2.5) == sp.Float(2.5)
        assert float(parse_expression("1e-3")) == pytest.approx(1e-3)

    @pytest.mark.parametrize(
        "text",
        [
            "__import__('os')",
            "log(x)",
            "x^2",
            "sin(",
            "1/0",
            "z + 1",
            "",
            "abs(x)",
        ],
    )
    def test_rejects_outside_grammar(self, text):
        with pytest.raises(ExpressionError):
            parse_expression(text)

    def test_symbols_are_shared(self):
        expr = parse_expression("t*x")
        assert expr.free_symbols == {T, X}


class TestCoefficient:
    @pytest.fixture
    def domain(self):
        return build_domain(1, [(0.0, 1.0)], [16])

    def test_separable_time_average_is_spatial_part(self, domain):
        coeff = build_coefficient("separable", b="cos(pi*x)", c="sin(2*pi*t)")
        assert coeff.form is CoefficientForm.SEPARABLE
        assert not coeff.is_autonomous
        stats = time_average(coeff, domain, mt=32)
        np.testing.assert_allclose(stats.a_T, np.cos(np.pi * domain.points[:, 0]), atol=1e-12)
        assert stats.spacetime_avg == pytest.approx(0.0, abs=1e-12)
        assert stats.sup_a > stats.max_aT

    def test_product_and_general_forms(self, domain):
        product = build_coefficient("product", b="x", c="2 + cos(2*pi*t)", period=1.0)
        general = build_coefficient("general", a="x*(2 + cos(2*pi*t))")
        for t in (0.0, 0.3, 0.7):
            np.testing.assert_allclose(
                product.evaluate(t, domain.points), general.evaluate(t, domain.points)
            )

    def test_period_is_respected(self, domain):
        coeff = build_coefficient("time_only", c="sin(pi*t)", period=2.0)
        assert coeff.is_spatially_flat
        np.testing.assert_allclose(
            coeff.evaluate(0.3, domain.points), coeff.evaluate(2.3, domain.points), atol=1e-12
        )

    def test_non_periodic_expression_rejected(self):
        with pytest.raises(InvalidParameter, match="periodic"):
            build_coefficient("general", a="t")

    def test_parts_must_depend_on_the_right_variables(self):
        with pytest.raises(InvalidParameter):
            build_coefficient("separable", b="sin(2*pi*t)", c="sin(2*pi*t)")
        with pytest.raises(InvalidParameter):
            build_coefficient("time_only", c="x")
        with pytest.raises(InvalidParameter):
            build_coefficient("separable", b="x")

    def test_bad_form_and_period(self):
        with pytest.raises(InvalidParameter):
            build_coefficient("random", value=1.0)
        with pytest.raises(InvalidParameter):
            constant_coefficient(1.0, period=0.0)

    def test_tabulated_interpolates_linearly_in_time(self):
        coeff = tabulated_coefficient([[0.0, 0.0], [1.0, 2.0], [0.0, 0.0]])
        points = np.array([[0.25], [0.75]])
        np.testing.assert_allclose(coeff.evaluate(0.25, points), [0.5, 1.0])
        np.testing.assert_allclose(coeff.evaluate(1.5, points), [1.0, 2.0])
        assert not coeff.lipschitz_in_x
        with pytest.raises(ShapeMismatch):
            coeff.evaluate(0.0, np.zeros((3, 1)))

    def test_tabulated_needs_periodic_slices(self):
        with pytest.raises(InvalidParameter):
            tabulated_coefficient([[0.0], [1.0], [0.5]])
        with pytest.raises(InvalidParameter):
            tabulated_coefficient([[0.0], [0.0]])

    def test_cumulative_integral_and_exact_average(self, domain):
        coeff = build_coefficient("time_only", c="1 + sin(2*pi*t)")
        half = coeff.cumulative_integral(0.5, domain.points)
        np.testing.assert_allclose(half, 0.5 + 1.0 / np.pi, atol=1e-10)
        np.testing.assert_allclose(coeff.exact_time_average(domain.points), 1.0, atol=1e-10)

    def test_shifted_and_perturbed(self, domain):
        coeff = build_coefficient("space_only", b="x")
        shifted = coeff.shifted(-0.5)
        np.testing.assert_allclose(
            shifted.evaluate(0.0, domain.points), domain.points[:, 0] - 0.5
        )
        delta = tabulated_coefficient(np.full((3, domain.size), 0.1))
        perturbed = coeff.perturbed(delta)
        np.testing.assert_allclose(
            perturbed.evaluate(0.4, domain.points), domain.points[:, 0] + 0.1
        )
        with pytest.raises(InvalidParameter):
            coeff.perturbed(constant_coefficient(1.0, period=2.0))

    def test_time_average_needs_two_nodes(self, domain):
        with pytest.raises(InvalidParameter):
            time_average(constant_coefficient(1.0), domain, mt=1)
