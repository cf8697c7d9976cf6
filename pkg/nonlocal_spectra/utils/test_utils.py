"""
Seeded random problems and test functions for property checks.
"""
import math
from typing import Optional

import numpy as np

from ..core.coefficient import Coefficient, build_coefficient, tabulated_coefficient
from ..core.geometry import build_domain
from ..core.kernel import make_kernel
from ..core.operator import OperatorSpec, SpaceTimeFunction

SYMMETRIC_1D = ("epanechnikov1d", "tent1d")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_autonomous_spec(seed, cells: int = 12, boundary: str = "neumann") -> OperatorSpec:
    """Random 1D problem with a time-independent tabulated a(x) in [-1, 1]."""
    rng = _rng(seed)
    domain = build_domain(1, [(0.0, 1.0)], [cells])
    values = rng.uniform(-1.0, 1.0, cells)
    return OperatorSpec(
        domain=domain,
        kernel=make_kernel(rng.choice(SYMMETRIC_1D)),
        coeff=tabulated_coefficient(np.tile(values, (3, 1))),
        D=float(rng.uniform(0.2, 2.0)),
        sigma=float(rng.uniform(0.4, 1.0)),
        k=float(rng.choice([0.0, 1.0])),
        boundary=boundary,
    )


def random_periodic_spec(seed, cells: int = 10, boundary: str = "neumann") -> OperatorSpec:
    """Random 1D problem with a separable trigonometric a(t, x)."""
    rng = _rng(seed)
    b0, b1 = rng.uniform(-0.5, 0.5), rng.uniform(-1.0, 1.0)
    c1, c2 = rng.uniform(-1.0, 1.0, 2)
    coeff = build_coefficient(
        "separable",
        b=f"{b0:.6f} + {b1:.6f}*cos(pi*x)",
        c=f"{c1:.6f}*sin(2*pi*t) + {c2:.6f}*cos(2*pi*t)",
    )
    return OperatorSpec(
        domain=build_domain(1, [(0.0, 1.0)], [cells]),
        kernel=make_kernel(rng.choice(SYMMETRIC_1D)),
        coeff=coeff,
        D=float(rng.uniform(0.2, 2.0)),
        sigma=float(rng.uniform(0.4, 1.0)),
        boundary=boundary,
    )


def random_positive_function(spec: OperatorSpec, seed) -> SpaceTimeFunction:
    """phi(t, x) = exp(w(x)) (1.5 + sin(2 pi t / T + p)), strictly positive."""
    rng = _rng(seed)
    values = np.exp(0.5 * rng.standard_normal(spec.size))
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    omega = 2.0 * math.pi / spec.period
    return SpaceTimeFunction.separable(
        values,
        lambda t: 1.5 + math.sin(omega * t + phase),
        lambda t: omega * math.cos(omega * t + phase),
        name="random positive",
    )


def random_perturbation(spec: OperatorSpec, seed, size: float = 0.1, mt: int = 8) -> Coefficient:
    """Tabulated delta(t, x) on the spec's grid with sup |delta| equal to size."""
    rng = _rng(seed)
    table = rng.uniform(-1.0, 1.0, (mt + 1, spec.size))
    table[-1] = table[0]
    table *= size / np.abs(table).max()
    return tabulated_coefficient(table, period=spec.period)


def random_nonnegative(spec: OperatorSpec, seed, zeros: Optional[float] = 0.3) -> np.ndarray:
    """Random nonnegative grid function with a share of exact zeros."""
    rng = _rng(seed)
    u = rng.uniform(0.0, 1.0, spec.size)
    if zeros:
        u[rng.uniform(size=spec.size) < zeros] = 0.0
    return u
