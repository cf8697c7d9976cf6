"""
T-periodic growth rates a(t, x).

A Coefficient is the sum of an analytic part (a sympy expression in t, x, y)
and an optional tabulated part sampled on a fixed grid over one period. The
named forms of the run config all reduce to these two ingredients.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
import sympy as sp
from scipy.integrate import quad_vec

from .exceptions import InvalidParameter, ShapeMismatch
from .expressions import (
    compile_expression,
    depends_on_space,
    depends_on_time,
    parse_expression,
)
from .geometry import Domain, integrate

logger = logging.getLogger(__name__)

PERIODICITY_TOL = 1e-9


class CoefficientForm(str, Enum):
    """How a coefficient was declared."""

    CONSTANT = "constant"
    TIME_ONLY = "time_only"
    SPACE_ONLY = "space_only"
    SEPARABLE = "separable"
    PRODUCT = "product"
    GENERAL = "general"
    TABULATED = "tabulated"


@dataclass(frozen=True, eq=False)
class Coefficient:
    """A T-periodic growth rate.

    Attributes:
        period: T > 0.
        form: declared form, kept for reporting.
        expression: analytic part, zero when absent.
        table: optional (mt + 1, n) samples at t_j = j T / mt on a fixed grid;
            first and last slices are equal.
        lipschitz_in_x: whether a is Lipschitz in x (enables the small-sigma
            reference limit for k = 0).
    """

    period: float
    form: CoefficientForm
    expression: sp.Expr = field(default_factory=lambda: sp.Integer(0))
    table: Optional[np.ndarray] = None
    lipschitz_in_x: bool = True

    @cached_property
    def _function(self):
        return compile_expression(self.expression)

    @property
    def is_autonomous(self) -> bool:
        if depends_on_time(self.expression):
            return False
        if self.table is None:
            return True
        return bool(np.all(self.table == self.table[0]))

    @property
    def is_spatially_flat(self) -> bool:
        if depends_on_space(self.expression):
            return False
        if self.table is None:
            return True
        return bool(np.all(self.table == self.table[:, :1]))

    def evaluate(self, t: float, points: np.ndarray) -> np.ndarray:
        """a(t, .) on an (n, dim) array of points."""
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        x = points[:, 0]
        y = points[:, 1] if points.shape[1] > 1 else np.zeros(n)
        values = np.asarray(self._function(float(t), x, y), dtype=float)
        values = np.broadcast_to(values, (n,)).copy()
        if self.table is not None:
            values += self._interpolate(t, n)
        return values

    def sample(self, times: Sequence[float], points: np.ndarray) -> np.ndarray:
        """Array of shape (len(times), n)."""
        return np.stack([self.evaluate(t, points) for t in times])

    def _interpolate(self, t: float, n: int) -> np.ndarray:
        table = self.table
        if table.shape[1] != n:
            raise ShapeMismatch(
                f"tabulated coefficient has {table.shape[1]} points, grid has {n}"
            )
        slots = table.shape[0] - 1
        phase = (float(t) % self.period) / self.period * slots
        j = min(int(math.floor(phase)), slots - 1)
        frac = phase - j
        return (1.0 - frac) * table[j] + frac * table[j + 1]

    def cumulative_integral(self, t: float, points: np.ndarray) -> np.ndarray:
        """Integral of a(s, .) over s in [0, t], by adaptive vector quadrature."""
        points = np.asarray(points, dtype=float)
        if t == 0.0:
            return np.zeros(points.shape[0])
        breaks = None
        if self.table is not None:
            slots = self.table.shape[0] - 1
            nodes = self.period * np.arange(1, slots) / slots
            inner = nodes[(nodes > min(0.0, t)) & (nodes < max(0.0, t))]
            breaks = list(inner) or None
        value, _ = quad_vec(
            lambda s: self.evaluate(s, points), 0.0, float(t),
            epsabs=1e-13, epsrel=1e-12, points=breaks,
        )
        return np.asarray(value, dtype=float)

    def exact_time_average(self, points: np.ndarray) -> np.ndarray:
        return self.cumulative_integral(self.period, points) / self.period

    def shifted(self, s: float) -> "Coefficient":
        """The coefficient a + s."""
        return replace(
            self,
            form=_combined_form(self.form, CoefficientForm.CONSTANT),
            expression=self.expression + sp.Float(float(s)),
        )

    def perturbed(self, other: "Coefficient") -> "Coefficient":
        """The coefficient a + delta, for delta with the same period."""
        if not math.isclose(self.period, other.period, rel_tol=1e-12):
            raise InvalidParameter(
                f"cannot add coefficients with periods {self.period} and {other.period}"
            )
        table = self.table
        if other.table is not None:
            if table is None:
                table = other.table
            elif table.shape != other.table.shape:
                raise ShapeMismatch(
                    f"tabulated parts differ in shape: {table.shape} vs {other.table.shape}"
                )
            else:
                table = table + other.table
        if table is not None:
            table = np.array(table, dtype=float)
            table.setflags(write=False)
        return replace(
            self,
            form=_combined_form(self.form, other.form),
            expression=self.expression + other.expression,
            table=table,
            lipschitz_in_x=self.lipschitz_in_x and other.lipschitz_in_x,
        )

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {
            "form": self.form.value,
            "T": self.period,
            "expression": str(self.expression),
            "lipschitz_in_x": self.lipschitz_in_x,
        }
        if self.table is not None:
            info["table_shape"] = list(self.table.shape)
        return info


def _combined_form(a: CoefficientForm, b: CoefficientForm) -> CoefficientForm:
    if b is CoefficientForm.CONSTANT:
        return a if a is not CoefficientForm.PRODUCT else CoefficientForm.GENERAL
    if a is CoefficientForm.CONSTANT:
        return b
    return CoefficientForm.GENERAL


@dataclass(frozen=True, eq=False)
class CoefficientStats:
    """Time averages and extrema of a coefficient on a grid.

    Attributes:
        a_T: (n,) time average per grid point.
        max_aT: max of a_T.
        min_aT: min of a_T.
        spacetime_avg: (1 / (T |Omega|)) times the double integral of a.
        sup_a: max over the sampled space-time grid.
        inf_a: min over the sampled space-time grid.
        mt: number of time nodes used.
    """

    a_T: np.ndarray
    max_aT: float
    min_aT: float
    spacetime_avg: float
    sup_a: float
    inf_a: float
    mt: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "max_aT": self.max_aT,
            "min_aT": self.min_aT,
            "spacetime_avg": self.spacetime_avg,
            "sup_a": self.sup_a,
            "inf_a": self.inf_a,
            "mt": self.mt,
        }


def period_nodes(period: float, mt: int) -> np.ndarray:
    """Left rectangle nodes j T / mt, j = 0 .. mt - 1."""
    return period * np.arange(mt) / mt


def time_average(coeff: Coefficient, domain: Domain, mt: int = 64) -> CoefficientStats:
    """Rectangle-rule time averages of a coefficient on a grid.

    Args:
        coeff: the coefficient.
        domain: grid to evaluate on.
        mt: number of uniform nodes over one period, at least 2.

    Returns:
        CoefficientStats.

    Raises:
        InvalidParameter: if mt < 2.
    """
    if int(mt) < 2:
        raise InvalidParameter(f"mt must be at least 2, got {mt}")
    mt = int(mt)
    samples = coeff.sample(period_nodes(coeff.period, mt), domain.points)
    a_T = samples.mean(axis=0)
    a_T.setflags(write=False)
    spacetime_avg = integrate(domain, a_T) / domain.volume
    return CoefficientStats(
        a_T=a_T,
        max_aT=float(a_T.max()),
        min_aT=float(a_T.min()),
        spacetime_avg=float(spacetime_avg),
        sup_a=float(samples.max()),
        inf_a=float(samples.min()),
        mt=mt,
    )


def _check_periodic(coeff: Coefficient) -> None:
    sample_points = np.array([[0.1, 0.2], [0.37, 0.81], [0.73, 0.45], [1.9, -0.6]])
    for t in (0.0, 0.23 * coeff.period, 0.61 * coeff.period):
        here = coeff.evaluate(t, sample_points)
        later = coeff.evaluate(t + coeff.period, sample_points)
        scale = 1.0 + np.abs(here).max()
        if np.abs(here - later).max() > PERIODICITY_TOL * scale:
            raise InvalidParameter(
                f"coefficient {coeff.expression} is not {coeff.period}-periodic in t"
            )


def constant_coefficient(value: float, period: float = 1.0) -> Coefficient:
    return build_coefficient("constant", period=period, value=value)


def build_coefficient(
    form: Any,
    period: float = 1.0,
    *,
    value: Optional[float] = None,
    b: Any = None,
    c: Any = None,
    a: Any = None,
    table: Any = None,
    lipschitz_in_x: Optional[bool] = None,
) -> Coefficient:
    """Create a coefficient from its declared form.

    Args:
        form: one of the CoefficientForm values.
        period: T > 0.
        value: the constant, for ``constant``.
        b: spatial part b(x, y), for ``space_only``, ``separable``, ``product``.
        c: temporal part c(t), for ``time_only``, ``separable``, ``product``.
        a: full expression a(t, x, y), for ``general``.
        table: (mt + 1, n) samples, for ``tabulated``.
        lipschitz_in_x: override of the Lipschitz flag; expressions default to
            True, tables to False.

    Raises:
        InvalidParameter: for a bad period, missing parts, parts depending on
            the wrong variables, or a coefficient that is not T-periodic.
        ExpressionError: for unparsable expression strings.
    """
    try:
        form = CoefficientForm(form)
    except ValueError:
        valid = ", ".join(f.value for f in CoefficientForm)
        raise InvalidParameter(f"unknown coefficient form {form!r}; valid: {valid}") from None
    period = float(period)
    if not period > 0:
        raise InvalidParameter(f"period T must be positive, got {period}")

    def need(name: str, part: Any) -> Any:
        if part is None:
            raise InvalidParameter(f"form {form.value!r} requires '{name}'")
        return part

    def spatial(part: Any) -> sp.Expr:
        expr = parse_expression(need("b", part))
        if depends_on_time(expr):
            raise InvalidParameter(f"spatial part b={part!r} must not depend on t")
        return expr

    def temporal(part: Any) -> sp.Expr:
        expr = parse_expression(need("c", part))
        if depends_on_space(expr):
            raise InvalidParameter(f"temporal part c={part!r} must not depend on x or y")
        return expr

    samples = None
    if form is CoefficientForm.CONSTANT:
        expression = sp.Float(float(need("value", value)))
    elif form is CoefficientForm.TIME_ONLY:
        expression = temporal(c)
    elif form is CoefficientForm.SPACE_ONLY:
        expression = spatial(b)
    elif form is CoefficientForm.SEPARABLE:
        expression = spatial(b) + temporal(c)
    elif form is CoefficientForm.PRODUCT:
        expression = spatial(b) * temporal(c)
    elif form is CoefficientForm.GENERAL:
        expression = parse_expression(need("a", a))
    else:
        expression = sp.Integer(0)
        samples = _validated_table(need("table", table))

    if lipschitz_in_x is None:
        lipschitz_in_x = samples is None

    coeff = Coefficient(
        period=period,
        form=form,
        expression=expression,
        table=samples,
        lipschitz_in_x=bool(lipschitz_in_x),
    )
    if samples is None:
        _check_periodic(coeff)
    logger.debug("Built %s coefficient: %s", form.value, coeff.describe())
    return coeff


def tabulated_coefficient(
    table: Any, period: float = 1.0, lipschitz_in_x: bool = False
) -> Coefficient:
    return build_coefficient(
        "tabulated", period=period, table=table, lipschitz_in_x=lipschitz_in_x
    )


def _validated_table(table: Any) -> np.ndarray:
    samples = np.array(table, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 3:
        raise InvalidParameter(
            f"tabulated coefficient needs shape (mt + 1, n) with mt >= 2, got {samples.shape}"
        )
    if not np.all(np.isfinite(samples)):
        raise InvalidParameter("tabulated coefficient has non-finite entries")
    if not np.allclose(samples[0], samples[-1], rtol=0.0, atol=1e-12):
        raise InvalidParameter("first and last time slices of a tabulated coefficient differ")
    samples[-1] = samples[0]
    samples.setflags(write=False)
    return samples


def coefficient_from_config(block: Mapping[str, Any]) -> Coefficient:
    """Build a coefficient from a validated config block."""
    return build_coefficient(
        block["form"],
        period=block.get("T", 1.0),
        value=block.get("value"),
        b=block.get("b"),
        c=block.get("c"),
        a=block.get("a"),
        table=block.get("table"),
        lipschitz_in_x=block.get("lipschitz_in_x"),
    )
