"""
Dispersal kernels and the discrete convolution matrix.

Kernels are compactly supported, nonnegative, positive at the origin and carry
an analytic normalization constant so that the continuum mass is exactly one.
The kernel matrix is assembled sparsely from neighbour pairs found with a
cKDTree, so small dispersal ranges on fine grids stay cheap.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse as sparse
from scipy.spatial import cKDTree
from scipy.special import expn

from .exceptions import GridTooCoarse, InvalidParameter
from .geometry import Domain, cells_for_resolution

logger = logging.getLogger(__name__)


class KernelFamily(str, Enum):
    """Supported kernel shapes."""

    EPANECHNIKOV_1D = "epanechnikov1d"
    TENT_1D = "tent1d"
    PRODUCT_EPANECHNIKOV_2D = "product_epanechnikov2d"
    RADIAL_BUMP_2D = "radial_bump2d"
    SKEWED_EPANECHNIKOV_1D = "skewed_epanechnikov1d"


_DIMENSION = {
    KernelFamily.EPANECHNIKOV_1D: 1,
    KernelFamily.TENT_1D: 1,
    KernelFamily.PRODUCT_EPANECHNIKOV_2D: 2,
    KernelFamily.RADIAL_BUMP_2D: 2,
    KernelFamily.SKEWED_EPANECHNIKOV_1D: 1,
}

# E_2(1) = integral over (0, 1) of exp(-1/u) du, the bump's radial mass factor.
_BUMP_MASS = float(expn(2, 1.0))


@dataclass(frozen=True)
class Kernel:
    """A compactly supported dispersal kernel J.

    Attributes:
        family: kernel shape.
        support_radius: gamma; J vanishes outside the open ball of this radius.
        normalization: analytic constant making the integral of J over R^N equal one.
        componentwise_symmetric: J is even in every coordinate.
        radial: J depends on |z| only.
        shift: center offset of the skewed family (zero otherwise).
    """

    family: KernelFamily
    support_radius: float
    normalization: float
    componentwise_symmetric: bool
    radial: bool
    shift: float = 0.0

    @property
    def dimension(self) -> int:
        return _DIMENSION[self.family]

    @property
    def even(self) -> bool:
        return self.componentwise_symmetric

    def __call__(self, z: Any) -> np.ndarray:
        z = _as_vectors(z, self.dimension)
        gamma = self.support_radius
        c = self.normalization

        if self.family is KernelFamily.EPANECHNIKOV_1D:
            u = z[..., 0] / gamma
            return np.where(np.abs(u) < 1.0, c * (1.0 - u * u), 0.0)

        if self.family is KernelFamily.TENT_1D:
            u = np.abs(z[..., 0]) / gamma
            return np.where(u < 1.0, c * (1.0 - u), 0.0)

        if self.family is KernelFamily.SKEWED_EPANECHNIKOV_1D:
            width = gamma - abs(self.shift)
            u = (z[..., 0] - self.shift) / width
            return np.where(np.abs(u) < 1.0, c * (1.0 - u * u), 0.0)

        if self.family is KernelFamily.PRODUCT_EPANECHNIKOV_2D:
            u = z / (gamma / math.sqrt(2.0))
            inside = np.all(np.abs(u) < 1.0, axis=-1)
            return np.where(inside, c * np.prod(1.0 - u * u, axis=-1), 0.0)

        # radial bump
        r2 = np.sum(z * z, axis=-1) / (gamma * gamma)
        inside = r2 < 1.0
        safe = np.where(inside, 1.0 - r2, 1.0)
        return np.where(inside, c * np.exp(-1.0 / safe), 0.0)

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {"family": self.family.value, "gamma": self.support_radius}
        if self.family is KernelFamily.SKEWED_EPANECHNIKOV_1D:
            info["shift"] = self.shift
        return info


def _as_vectors(z: Any, dimension: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if dimension == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != dimension:
        raise InvalidParameter(
            f"kernel expects {dimension}-vectors, got array of shape {z.shape}"
        )
    return z


def default_gamma(family: KernelFamily, shift: float = 0.0) -> float:
    """Support radius used when the config does not name one."""
    if family is KernelFamily.PRODUCT_EPANECHNIKOV_2D:
        return math.sqrt(2.0)
    if family is KernelFamily.SKEWED_EPANECHNIKOV_1D:
        return 1.0 + abs(shift)
    return 1.0


def make_kernel(
    family: Any,
    gamma: Optional[float] = None,
    shift: float = 0.0,
) -> Kernel:
    """Create a kernel of the given family.

    Args:
        family: a KernelFamily or its string value.
        gamma: support radius; the family default when omitted.
        shift: center offset, only meaningful for ``skewed_epanechnikov1d``.

    Raises:
        InvalidParameter: for unknown families, nonpositive gamma, or a shift
            that would make J(0) vanish.
    """
    try:
        family = KernelFamily(family)
    except ValueError:
        valid = ", ".join(f.value for f in KernelFamily)
        raise InvalidParameter(f"unknown kernel family {family!r}; valid: {valid}") from None

    if gamma is None:
        gamma = default_gamma(family, shift)
    gamma = float(gamma)
    if not gamma > 0:
        raise InvalidParameter(f"support radius must be positive, got {gamma}")

    if family is KernelFamily.EPANECHNIKOV_1D:
        return Kernel(family, gamma, 3.0 / (4.0 * gamma), True, True)
    if family is KernelFamily.TENT_1D:
        return Kernel(family, gamma, 1.0 / gamma, True, True)
    if family is KernelFamily.PRODUCT_EPANECHNIKOV_2D:
        half_width = gamma / math.sqrt(2.0)
        return Kernel(family, gamma, (3.0 / (4.0 * half_width)) ** 2, True, False)
    if family is KernelFamily.RADIAL_BUMP_2D:
        return Kernel(family, gamma, 1.0 / (math.pi * gamma * gamma * _BUMP_MASS), True, True)

    shift = float(shift)
    width = gamma - abs(shift)
    if not abs(shift) < width:
        raise InvalidParameter(
            f"shift {shift} too large for gamma {gamma}: J(0) would vanish"
        )
    return Kernel(family, gamma, 3.0 / (4.0 * width), shift == 0.0, shift == 0.0, shift)


def eval_kernel(kernel: Kernel, z: Any) -> np.ndarray:
    """Evaluate J at one or many displacement vectors."""
    return kernel(z)


def quadrature_mass(kernel: Kernel, points_per_axis: int = 200) -> float:
    """Midpoint-rule integral of J over its bounding box."""
    gamma = kernel.support_radius
    step = 2.0 * gamma / points_per_axis
    axis = -gamma + step * (np.arange(points_per_axis) + 0.5)
    if kernel.dimension == 1:
        return float(kernel(axis).sum() * step)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    z = np.stack([gx, gy], axis=-1)
    return float(kernel(z).sum() * step * step)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Discrete convolution matrix.

    Attributes:
        K: sparse (n, n) matrix, K[i, j] = sigma^-N J((x_i - x_j)/sigma) w_j.
        degree: row sums of K.
        sigma: dispersal range used for the scaling.
    """

    K: sparse.csr_matrix
    degree: np.ndarray
    sigma: float

    @property
    def size(self) -> int:
        return int(self.K.shape[0])

    def neumann_part(self) -> sparse.csr_matrix:
        """K - diag(d): annihilates constants."""
        return (self.K - sparse.diags(self.degree)).tocsr()

    def dirichlet_part(self) -> sparse.csr_matrix:
        """K - I: subtracts the full continuum mass."""
        return (self.K - sparse.identity(self.size, format="csr")).tocsr()

    def dense(self) -> np.ndarray:
        return self.K.toarray()


def build_kernel_matrix(domain: Domain, kernel: Kernel, sigma: float) -> KernelMatrix:
    """Assemble the scaled convolution matrix on a grid.

    Args:
        domain: quadrature grid.
        kernel: dispersal kernel, same dimension as the grid.
        sigma: dispersal range.

    Returns:
        KernelMatrix with degree equal to the discrete row sums.

    Raises:
        InvalidParameter: for nonpositive sigma or a dimension mismatch.
        GridTooCoarse: if h exceeds gamma * sigma.
    """
    sigma = float(sigma)
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    if kernel.dimension != domain.dimension:
        raise InvalidParameter(
            f"{kernel.family.value} is {kernel.dimension}D but the domain is {domain.dimension}D"
        )

    reach = kernel.support_radius * sigma
    if domain.h > reach:
        raise GridTooCoarse(domain.h, reach, cells_for_resolution(domain, reach))

    n = domain.size
    points = domain.points
    pairs = cKDTree(points).query_pairs(r=reach, output_type="ndarray")
    diagonal = np.arange(n)
    rows = np.concatenate([diagonal, pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([diagonal, pairs[:, 1], pairs[:, 0]])

    scale = sigma ** (-domain.dimension)
    values = scale * kernel((points[rows] - points[cols]) / sigma) * domain.weights[cols]

    K = sparse.csr_matrix((values, (rows, cols)), shape=(n, n))
    K.eliminate_zeros()
    degree = np.asarray(K.sum(axis=1)).ravel()
    degree.setflags(write=False)

    logger.debug(
        "Assembled kernel matrix: n=%d, nnz=%d, sigma=%.4g", n, K.nnz, sigma
    )
    return KernelMatrix(K=K, degree=degree, sigma=sigma)
