"""
Sweeps in the dispersal rate D and the dispersal range sigma.

Each sweep point is an independent principal spectrum point computation. The
results carry the known limits as references together with the distance of
every point to each reference.
"""
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    IncompatibleLimit,
    InvalidParameter,
    KernelNotSymmetric,
    NonlocalSpectraError,
    TooLarge,
)
from .geometry import build_domain, cells_for_resolution
from .operator import OperatorSpec
from .spectral import (
    EigenResult,
    EvolutionConfig,
    certify_test_pair,
    ode_test_function,
    principal_spectrum_point,
)

logger = logging.getLogger(__name__)

REFINEMENT = 4
DEFAULT_MAX_POINTS = 5000


@dataclass(frozen=True)
class LimitReference:
    """A known limit of lambda1.

    Attributes:
        name: short identifier, used in CSV column names.
        value: the limiting value.
        end: which end of the parameter range it is approached at:
            "small", "large" or "both".
        label: human readable formula.
    """

    name: str
    value: float
    end: str
    label: str

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "value": self.value, "end": self.end, "label": self.label}


@dataclass
class SweepPoint:
    value: float
    lambda1: Optional[float] = None
    lambda_star: Optional[float] = None
    is_principal: Optional[bool] = None
    iters: Optional[int] = None
    steps_per_period: Optional[int] = None
    cells: Tuple[int, ...] = ()
    n: int = 0
    elapsed: float = 0.0
    upper_bound_margin: Optional[float] = None
    error: Optional[Dict[str, str]] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "lambda1": self.lambda1,
            "lambda_star": self.lambda_star,
            "is_principal": self.is_principal,
            "iters": self.iters,
            "steps_per_period": self.steps_per_period,
            "cells": list(self.cells),
            "n": self.n,
            "upper_bound_margin": self.upper_bound_margin,
            "error": self.error,
        }


@dataclass
class SweepResult:
    """lambda1 along one parameter, with reference limits.

    Attributes:
        parameter: "D" or "sigma".
        values: ascending parameter values.
        points: one SweepPoint per value, same order.
        references: limits the gaps are measured against.
        k: cost exponent used (sigma sweeps).
    """

    parameter: str
    values: np.ndarray
    points: List[SweepPoint]
    references: List[LimitReference] = field(default_factory=list)
    k: Optional[float] = None

    @property
    def lambda1(self) -> np.ndarray:
        return np.array([p.lambda1 if p.ok else np.nan for p in self.points], dtype=float)

    @property
    def gaps(self) -> Dict[str, np.ndarray]:
        return {ref.name: np.abs(self.lambda1 - ref.value) for ref in self.references}

    @property
    def gap_monotone(self) -> Dict[str, bool]:
        return {ref.name: _monotone(self.gaps[ref.name], ref.end) for ref in self.references}

    @property
    def failures(self) -> List[SweepPoint]:
        return [p for p in self.points if not p.ok]

    def rows(self) -> List[Dict[str, Any]]:
        """CSV rows: param, lambda1, lambda_star, is_principal, gap_<name>..."""
        gaps = self.gaps
        rows = []
        for i, point in enumerate(self.points):
            row: Dict[str, Any] = {
                "param": point.value,
                "lambda1": point.lambda1,
                "lambda_star": point.lambda_star,
                "is_principal": point.is_principal,
            }
            for ref in self.references:
                gap = gaps[ref.name][i]
                row[f"gap_{ref.name}"] = None if math.isnan(gap) else float(gap)
            rows.append(row)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "parameter": self.parameter,
            "k": self.k,
            "values": [float(v) for v in self.values],
            "points": [p.to_dict() for p in self.points],
            "references": [r.to_dict() for r in self.references],
            "gap_monotone": self.gap_monotone,
        }


def _monotone(gaps: np.ndarray, end: str) -> bool:
    """Whether gaps shrink strictly toward the end(s) the limit lives at."""
    if np.any(np.isnan(gaps)):
        return False
    steps = np.diff(gaps)
    if end == "small":
        return bool(np.all(steps > 0))
    if end == "large":
        return bool(np.all(steps < 0))
    # both ends: rises to a single peak then falls
    peak = int(np.argmax(gaps))
    return bool(np.all(steps[:peak] > 0) and np.all(steps[peak:] < 0))


def ordered_values(values: Sequence[float], name: str) -> np.ndarray:
    """Positive, strictly monotone parameter values, returned ascending.

    Raises:
        InvalidParameter: for empty, nonpositive, repeated or unsorted values.
    """
    array = np.asarray(list(values), dtype=float)
    if array.size == 0:
        raise InvalidParameter(f"{name} sweep needs at least one value")
    if not np.all(array > 0):
        raise InvalidParameter(f"{name} values must be positive, got {array.tolist()}")
    steps = np.diff(array)
    if np.all(steps < 0):
        array = array[::-1]
    elif not np.all(steps > 0):
        raise InvalidParameter(f"{name} values must be strictly sorted, got {array.tolist()}")
    return array


def default_jobs(count: int, jobs: Optional[int] = None) -> int:
    if jobs:
        return max(1, int(jobs))
    return max(1, min(count, os.cpu_count() or 1))


def run_points(task: Callable[[float], Any], values: Sequence[float], jobs: Optional[int]) -> List[Any]:
    """Evaluate points concurrently, results in input order."""
    workers = default_jobs(len(values), jobs)
    if workers == 1:
        return [task(v) for v in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, values))


def _solve_point(
    value: float,
    build: Callable[[], OperatorSpec],
    cfg: EvolutionConfig,
    check_upper_bound: bool,
) -> SweepPoint:
    started = time.perf_counter()
    point = SweepPoint(value=float(value))
    try:
        spec = build()
        point.cells, point.n = spec.domain.cells, spec.size
        result = principal_spectrum_point(spec, cfg)
        point.lambda1 = result.lambda1
        point.lambda_star = result.lambda_star
        point.is_principal = result.is_principal
        point.iters = result.iters
        point.steps_per_period = result.steps_per_period
        if check_upper_bound:
            point.upper_bound_margin = -spec.stats.spacetime_avg - result.lambda1
    except NonlocalSpectraError as e:
        logger.warning("Sweep point %g failed: %s", value, e)
        point.error = e.to_dict()
    point.elapsed = time.perf_counter() - started
    return point


def sweep_dispersal_rate(
    spec: OperatorSpec,
    D_values: Sequence[float],
    cfg: Optional[EvolutionConfig] = None,
    jobs: Optional[int] = None,
) -> SweepResult:
    """lambda1 along D with limits -max a_T (D -> 0) and the space-time average (D -> inf).

    Failed points are recorded and the sweep continues.
    """
    cfg = cfg or EvolutionConfig()
    values = ordered_values(D_values, "D")
    stats = spec.stats
    symmetric = spec.kernel.even
    logger.info("Sweeping D over %d values", len(values))

    points = run_points(
        lambda D: _solve_point(D, lambda: spec.with_(D=float(D)), cfg, symmetric),
        values,
        jobs,
    )
    references = [
        LimitReference("neg_max_aT", -stats.max_aT, "small", "-max a_T"),
        LimitReference("neg_spacetime_avg", -stats.spacetime_avg, "large", "-(1/(T|Omega|)) int int a"),
    ]
    return SweepResult("D", values, points, references)


def range_references(
    spec: OperatorSpec, k: float, requested: Optional[Sequence[str]] = None
) -> List[LimitReference]:
    """Limits known for a sigma sweep with exponent k.

    Raises:
        IncompatibleLimit: if the averaging limit is requested outside the
            autonomous two-dimensional k > 2 setting.
    """
    stats = spec.stats
    references = []
    small_end = k == 0 and spec.coeff.lipschitz_in_x
    references.append(
        LimitReference("neg_max_aT", -stats.max_aT, "both" if small_end else "large", "-max a_T")
    )

    averaging = k > 2 and spec.is_autonomous and spec.domain.dimension == 2
    wanted = set(requested or [])
    if "neg_space_avg" in wanted and not averaging:
        raise IncompatibleLimit(
            "the spatial-average limit is only known for k > 2, autonomous a and N = 2 "
            f"(got k={k}, autonomous={spec.is_autonomous}, N={spec.domain.dimension})"
        )
    if averaging:
        references.append(
            LimitReference("neg_space_avg", -stats.spacetime_avg, "small", "-(1/|Omega|) int a")
        )
    unknown = wanted - {"neg_max_aT", "neg_space_avg"}
    if unknown:
        raise InvalidParameter(f"unknown reference limit(s) {sorted(unknown)}")
    return [r for r in references if not wanted or r.name in wanted]


def refined_spec(
    spec: OperatorSpec, sigma: float, k: float, max_points: int = DEFAULT_MAX_POINTS
) -> OperatorSpec:
    """Copy of spec at (sigma, k) on a grid with h <= gamma sigma / 4.

    Raises:
        TooLarge: if the refined grid would exceed max_points.
    """
    domain = spec.domain
    needed = cells_for_resolution(domain, spec.kernel.support_radius * sigma / REFINEMENT)
    cells = tuple(max(c, r) for c, r in zip(domain.cells, needed))
    if cells != domain.cells:
        size = int(np.prod(cells))
        if size > max_points:
            raise TooLarge(
                f"sigma={sigma:g} needs {list(cells)} cells ({size} points), cap is {max_points}"
            )
        domain = build_domain(domain.dimension, domain.bounds, cells)
        logger.debug("Refined grid to %s for sigma=%g", list(cells), sigma)
    return spec.with_(domain=domain, sigma=float(sigma), k=float(k))


def sweep_dispersal_range(
    spec: OperatorSpec,
    sigma_values: Sequence[float],
    k: float,
    cfg: Optional[EvolutionConfig] = None,
    jobs: Optional[int] = None,
    refine: bool = True,
    references: Optional[Sequence[str]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> SweepResult:
    """lambda1 along sigma at fixed k.

    With ``refine`` each point gets its own grid keeping h <= gamma sigma / 4;
    without it, under-resolved points fail with GridTooCoarse. Per-point
    failures are recorded and the sweep continues.
    """
    cfg = cfg or EvolutionConfig()
    k = float(k)
    if not k >= 0:
        raise InvalidParameter(f"exponent k must be nonnegative, got {k}")
    values = ordered_values(sigma_values, "sigma")
    refs = range_references(spec, k, references)
    logger.info("Sweeping sigma over %d values (k=%g)", len(values), k)

    def build(sigma: float) -> Callable[[], OperatorSpec]:
        if refine:
            return lambda: refined_spec(spec, sigma, k, max_points)
        return lambda: spec.with_(sigma=float(sigma), k=k)

    points = run_points(
        lambda s: _solve_point(s, build(s), cfg, spec.kernel.even), values, jobs
    )
    return SweepResult("sigma", values, points, refs, k=k)


def sweep_dispersal_ranges(
    spec: OperatorSpec,
    sigma_values: Sequence[float],
    k_values: Sequence[float],
    **kwargs: Any,
) -> List[SweepResult]:
    """One sigma sweep per exponent k."""
    return [sweep_dispersal_range(spec, sigma_values, k, **kwargs) for k in k_values]


def verify_upper_bound(
    spec: OperatorSpec,
    cfg: Optional[EvolutionConfig] = None,
    result: Optional[EigenResult] = None,
) -> float:
    """Signed margin -(1/(|Omega| T)) int int a - lambda1; nonnegative up to 1e-6.

    Raises:
        KernelNotSymmetric: if the kernel is not componentwise symmetric.
    """
    if not spec.kernel.even:
        raise KernelNotSymmetric(
            f"upper bound needs a componentwise symmetric kernel, got {spec.kernel.describe()}"
        )
    result = result or principal_spectrum_point(spec, cfg)
    return -spec.stats.spacetime_avg - result.lambda1


@dataclass
class SmallDispersalBracket:
    """Test-pair checks of -max a_T - eps <= lambda1 <= -min a_T + eps along D.

    Attributes:
        epsilon: bracket width.
        D_values: ascending rates checked.
        lower_holds: per D, (-max a_T - eps, phi) is a subsolution pair.
        upper_holds: per D, (-min a_T + eps, phi) is a supersolution pair.
        D_epsilon: largest D such that both hold for it and every smaller D
            in the schedule, or None.
    """

    epsilon: float
    lower: float
    upper: float
    D_values: np.ndarray
    lower_holds: List[bool]
    upper_holds: List[bool]
    D_epsilon: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "lower": self.lower,
            "upper": self.upper,
            "D_values": [float(d) for d in self.D_values],
            "lower_holds": self.lower_holds,
            "upper_holds": self.upper_holds,
            "D_epsilon": self.D_epsilon,
        }


def small_dispersal_bracket(
    spec: OperatorSpec,
    epsilon: float,
    D_values: Sequence[float],
    mt_samples: int = 64,
) -> SmallDispersalBracket:
    """Certify the small-D bracket with the periodic ODE solution as test function."""
    if not float(epsilon) > 0:
        raise InvalidParameter(f"epsilon must be positive, got {epsilon}")
    values = ordered_values(D_values, "D")
    phi = ode_test_function(spec)
    stats = spec.stats
    lower = -stats.max_aT - epsilon
    upper = -stats.min_aT + epsilon

    lower_holds, upper_holds = [], []
    for D in values:
        at_D = spec.with_(D=float(D))
        lower_holds.append(certify_test_pair(at_D, lower, phi, "subsolution", mt_samples).holds)
        upper_holds.append(certify_test_pair(at_D, upper, phi, "supersolution", mt_samples).holds)

    D_epsilon = None
    for D, lo, hi in zip(values, lower_holds, upper_holds):
        if not (lo and hi):
            break
        D_epsilon = float(D)
    logger.info("Small-dispersal bracket eps=%g: D_eps=%s", epsilon, D_epsilon)
    return SmallDispersalBracket(
        epsilon=float(epsilon),
        lower=lower,
        upper=upper,
        D_values=values,
        lower_holds=lower_holds,
        upper_holds=upper_holds,
        D_epsilon=D_epsilon,
    )
