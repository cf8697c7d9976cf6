"""
Spatial discretization.

Uniform cell-center (midpoint) grids on intervals and axis-aligned rectangles.
Points are ordered row-major with the first axis varying slowest, so every
matrix assembled downstream is reproducible.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .exceptions import DegenerateBounds, InvalidParameter, ShapeMismatch, TooFewCells

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Domain:
    """Quadrature grid over a bounded box.

    Attributes:
        dimension: 1 or 2.
        bounds: per-axis (low, high) interval.
        cells: per-axis cell count.
        points: (n, dimension) array of cell centers.
        weights: (n,) array of cell measures.
        h: largest cell diameter (spacing in 1D, diagonal in 2D).
        volume: total measure of the box.
    """

    dimension: int
    bounds: Tuple[Tuple[float, float], ...]
    cells: Tuple[int, ...]
    points: np.ndarray
    weights: np.ndarray
    h: float
    volume: float

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / c for (lo, hi), c in zip(self.bounds, self.cells))

    @property
    def inradius(self) -> float:
        return min(hi - lo for lo, hi in self.bounds) / 2.0

    def distance_to_boundary(self) -> np.ndarray:
        """Distance of every grid point to the boundary of the box."""
        lows = np.array([lo for lo, _ in self.bounds])
        highs = np.array([hi for _, hi in self.bounds])
        gaps = np.minimum(self.points - lows, highs - self.points)
        return gaps.min(axis=1)

    def coordinate(self, axis: int) -> np.ndarray:
        return self.points[:, axis]

    def describe(self) -> Dict[str, Any]:
        """Config-shaped description, echoed into manifests."""
        return {
            "dimension": self.dimension,
            "bounds": [list(b) for b in self.bounds],
            "cells": list(self.cells),
        }


def build_domain(
    dimension: int,
    bounds: Sequence[Sequence[float]],
    cells: Sequence[int],
) -> Domain:
    """Build a uniform cell-center grid.

    Args:
        dimension: 1 or 2.
        bounds: one (low, high) pair per axis.
        cells: one cell count per axis, each at least 2.

    Returns:
        Domain: immutable grid with midpoint quadrature weights.

    Raises:
        InvalidParameter: if the dimension is unsupported or the axis lists do not match it.
        DegenerateBounds: if an interval has zero or negative length.
        TooFewCells: if a cell count is below 2.
    """
    if dimension not in (1, 2):
        raise InvalidParameter(f"dimension must be 1 or 2, got {dimension}")
    if len(bounds) != dimension or len(cells) != dimension:
        raise InvalidParameter(
            f"expected {dimension} bounds and cell counts, got {len(bounds)} and {len(cells)}"
        )

    axes = []
    spacings = []
    for (lo, hi), count in zip(bounds, cells):
        lo, hi = float(lo), float(hi)
        if not hi > lo:
            raise DegenerateBounds(f"interval ({lo}, {hi}) has no interior")
        if int(count) < 2:
            raise TooFewCells(f"need at least 2 cells per axis, got {count}")
        step = (hi - lo) / int(count)
        axes.append(lo + step * (np.arange(int(count)) + 0.5))
        spacings.append(step)

    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    cell_measure = float(np.prod(spacings))
    weights = np.full(points.shape[0], cell_measure)
    volume = float(np.prod([hi - lo for lo, hi in bounds]))
    h = spacings[0] if dimension == 1 else math.hypot(*spacings)

    points.setflags(write=False)
    weights.setflags(write=False)
    domain = Domain(
        dimension=dimension,
        bounds=tuple((float(lo), float(hi)) for lo, hi in bounds),
        cells=tuple(int(c) for c in cells),
        points=points,
        weights=weights,
        h=float(h),
        volume=volume,
    )
    logger.debug("Built %dD domain with %d points (h=%.4g)", dimension, domain.size, h)
    return domain


def integrate(domain: Domain, values: Any) -> float:
    """Midpoint-rule integral of a grid function.

    Raises:
        ShapeMismatch: if ``values`` does not have one entry per grid point.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (domain.size,):
        raise ShapeMismatch(
            f"grid function has shape {values.shape}, domain has {domain.size} points"
        )
    return float(domain.weights @ values)


def cells_for_resolution(domain: Domain, reach: float) -> Tuple[int, ...]:
    """Smallest per-axis cell counts (same spacing target) whose h is at most ``reach``."""
    lengths = [hi - lo for lo, hi in domain.bounds]
    target = reach if domain.dimension == 1 else reach / math.sqrt(2.0)
    counts = []
    for length in lengths:
        needed = math.ceil(length / target - 1e-12)
        counts.append(max(2, needed))
    return tuple(counts)
