"""
Nonlocal dispersal operators of Neumann and Dirichlet type.

The semidiscrete generator is

    A(t) = (D / sigma^k) G + diag(a(t, .))

with G = K - diag(d) for Neumann (mass stays in the domain) and G = K - I for
Dirichlet (the full continuum mass leaves). Generators are sparse and
assembled lazily per time slice.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, Optional

import numpy as np
import scipy.sparse as sparse

from .coefficient import Coefficient, CoefficientStats, time_average
from .exceptions import InvalidParameter, MissingTimeDerivative, ShapeMismatch
from .geometry import Domain
from .kernel import Kernel, KernelMatrix, build_kernel_matrix

logger = logging.getLogger(__name__)

AVERAGING_NODES = 256


class Boundary(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Everything that defines one operator L.

    Attributes:
        domain: quadrature grid.
        kernel: dispersal kernel J.
        coeff: growth rate a(t, x).
        D: dispersal rate, > 0.
        sigma: dispersal range, > 0.
        k: cost exponent in D / sigma^k, >= 0.
        boundary: Neumann or Dirichlet.

    The kernel matrix is built on construction, so an under-resolved grid
    raises GridTooCoarse immediately.
    """

    domain: Domain
    kernel: Kernel
    coeff: Coefficient
    D: float
    sigma: float
    k: float = 0.0
    boundary: Boundary = Boundary.NEUMANN

    def __post_init__(self):
        if not float(self.D) > 0:
            raise InvalidParameter(f"dispersal rate D must be positive, got {self.D}")
        if not float(self.sigma) > 0:
            raise InvalidParameter(f"dispersal range sigma must be positive, got {self.sigma}")
        if not float(self.k) >= 0:
            raise InvalidParameter(f"exponent k must be nonnegative, got {self.k}")
        try:
            object.__setattr__(self, "boundary", Boundary(self.boundary))
        except ValueError:
            raise InvalidParameter(
                f"boundary must be 'neumann' or 'dirichlet', got {self.boundary!r}"
            ) from None
        self.kernel_matrix  # resolvability check

    @property
    def size(self) -> int:
        return self.domain.size

    @property
    def period(self) -> float:
        return self.coeff.period

    @property
    def is_autonomous(self) -> bool:
        return self.coeff.is_autonomous

    @property
    def dispersal_coefficient(self) -> float:
        """D / sigma^k."""
        return float(self.D) / float(self.sigma) ** float(self.k)

    @cached_property
    def kernel_matrix(self) -> KernelMatrix:
        return build_kernel_matrix(self.domain, self.kernel, self.sigma)

    @cached_property
    def dispersal(self) -> sparse.csr_matrix:
        """(D / sigma^k) G, the time-independent part of A(t)."""
        km = self.kernel_matrix
        part = km.neumann_part() if self.boundary is Boundary.NEUMANN else km.dirichlet_part()
        return (self.dispersal_coefficient * part).tocsr()

    @cached_property
    def loss(self) -> np.ndarray:
        """Per-point dispersal loss rate: (D / sigma^k) d, or D / sigma^k for Dirichlet."""
        c = self.dispersal_coefficient
        if self.boundary is Boundary.NEUMANN:
            return c * self.kernel_matrix.degree
        return np.full(self.size, c)

    @cached_property
    def stats(self) -> CoefficientStats:
        return time_average(self.coeff, self.domain, AVERAGING_NODES)

    def growth(self, t: float) -> np.ndarray:
        return self.coeff.evaluate(t, self.domain.points)

    def with_(self, **changes: Any) -> "OperatorSpec":
        """Copy with some fields replaced; validation runs again."""
        return replace(self, **changes)

    def describe(self) -> Dict[str, Any]:
        return {
            "domain": self.domain.describe(),
            "kernel": self.kernel.describe(),
            "coefficient": self.coeff.describe(),
            "D": float(self.D),
            "sigma": float(self.sigma),
            "k": float(self.k),
            "boundary": self.boundary.value,
            "n": self.size,
        }


@dataclass(frozen=True, eq=False)
class GeneratorSlice:
    """A(t) at one time, kept split into dispersal and diagonal parts."""

    t: float
    dispersal: sparse.csr_matrix
    growth: np.ndarray

    @property
    def diagonal(self) -> np.ndarray:
        return self.dispersal.diagonal() + self.growth

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.dispersal @ u + self.growth * u

    def matrix(self) -> sparse.csr_matrix:
        return (self.dispersal + sparse.diags(self.growth)).tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def min_offdiagonal(self) -> float:
        """Smallest off-diagonal entry; nonnegative for a Metzler matrix."""
        off = self.dispersal - sparse.diags(self.dispersal.diagonal())
        off = off.tocoo()
        return float(off.data.min()) if off.nnz else 0.0


def assemble_generator(spec: OperatorSpec, t: float) -> GeneratorSlice:
    """The generator slice A(t)."""
    return GeneratorSlice(t=float(t), dispersal=spec.dispersal, growth=spec.growth(t))


class SpaceTimeFunction:
    """A grid-valued function of time with an exact time derivative.

    Args:
        value: t -> (n,) array.
        derivative: t -> (n,) array of the exact time derivative.
        time_constant: if True the derivative is identically zero.
        name: label used in reports.
    """

    def __init__(
        self,
        value: Callable[[float], np.ndarray],
        derivative: Optional[Callable[[float], np.ndarray]] = None,
        time_constant: bool = False,
        name: str = "phi",
    ):
        self._value = value
        self._derivative = derivative
        self.time_constant = time_constant
        self.name = name

    def value(self, t: float) -> np.ndarray:
        return np.asarray(self._value(float(t)), dtype=float)

    def derivative(self, t: float) -> np.ndarray:
        if self.time_constant:
            return np.zeros_like(self.value(t))
        if self._derivative is None:
            raise MissingTimeDerivative(
                f"test function {self.name!r} varies in time but has no derivative"
            )
        return np.asarray(self._derivative(float(t)), dtype=float)

    def scaled(self, weights: np.ndarray, name: Optional[str] = None) -> "SpaceTimeFunction":
        """Pointwise product with a time-independent grid function."""
        weights = np.asarray(weights, dtype=float)
        derivative = None
        if self._derivative is not None:
            derivative = lambda t: weights * self.derivative(t)  # noqa: E731
        return SpaceTimeFunction(
            lambda t: weights * self.value(t),
            derivative,
            time_constant=self.time_constant,
            name=name or f"scaled {self.name}",
        )

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "SpaceTimeFunction":
        values = np.full(int(n), float(value))
        return cls(lambda t: values, time_constant=True, name=f"constant {value}")

    @classmethod
    def stationary(cls, values: Any, name: str = "stationary") -> "SpaceTimeFunction":
        values = np.array(values, dtype=float)
        return cls(lambda t: values, time_constant=True, name=name)

    @classmethod
    def separable(
        cls,
        values: Any,
        g: Callable[[float], float],
        dg: Callable[[float], float],
        name: str = "separable",
    ) -> "SpaceTimeFunction":
        """phi(t, x) = values(x) g(t)."""
        values = np.array(values, dtype=float)
        return cls(lambda t: values * g(t), lambda t: values * dg(t), name=name)

    def __repr__(self) -> str:
        return f"SpaceTimeFunction({self.name!r}, time_constant={self.time_constant})"


def apply_L(spec: OperatorSpec, phi: SpaceTimeFunction, t: float) -> np.ndarray:
    """L[phi](t, .) = -phi_t + (D / sigma^k) G phi + a phi on the grid.

    Raises:
        MissingTimeDerivative: if phi varies in time without a derivative.
        ShapeMismatch: if phi is not a grid function of the spec's grid.
    """
    values = phi.value(t)
    if values.shape != (spec.size,):
        raise ShapeMismatch(
            f"test function has shape {values.shape}, grid has {spec.size} points"
        )
    return -phi.derivative(t) + assemble_generator(spec, t).matvec(values)


def lambda_star(spec: OperatorSpec) -> float:
    """min_i [loss_i - a_T(x_i)], the threshold below which lambda1 is principal."""
    return float(np.min(spec.loss - spec.stats.a_T))
