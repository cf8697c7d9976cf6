"""
Maximum principles and their spectral characterization.

The strong maximum principle holds exactly when lambda1 >= 0 and a strict
super-solution exists exactly when lambda1 > 0. Decisions use the discrete
lambda1 with a dead band of DEAD_BAND around zero. When lambda1 < 0 a witness
is built by cutting the principal eigenfunction off near the boundary.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .asymptotics import run_points
from .coefficient import period_nodes
from .exceptions import ConstructionFailed, EigenvalueNotNegative, NonlocalSpectraError
from .operator import OperatorSpec, SpaceTimeFunction, apply_L
from .spectral import (
    EigenResult,
    EvolutionConfig,
    eigen_test_function,
    principal_spectrum_point,
)

logger = logging.getLogger(__name__)

DEAD_BAND = 1e-8


@dataclass
class SupersolutionCertificate:
    """The principal eigenfunction, with L[phi] = -lambda1 phi <= 0.

    Inside the dead band the sign of lambda1 is not resolved, so the
    certificate is typed "inconclusive" and certifies nothing.
    """

    worst_residual: float
    min_value: float
    type: str = "supersolution"

    @property
    def certifies(self) -> bool:
        return self.type == "supersolution"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.type,
            "certifies": self.certifies,
            "worst_residual": self.worst_residual,
            "min_value": self.min_value,
        }


@dataclass
class Counterexample:
    """u = eta phi with L[u] > 0 at every sample.

    Attributes:
        delta: cutoff width; eta = clamp(dist(x, boundary) / delta, 0, 1).
        min_Lu: smallest sampled value of L[u]; positive.
        eta: the cutoff on the grid.
        snapshots: u at the sample times, shape (mt, n).
        times: sample times.
        tried: cutoff widths tried, in order.
    """

    delta: float
    min_Lu: float
    eta: np.ndarray
    snapshots: np.ndarray
    times: np.ndarray
    tried: List[float] = field(default_factory=list)
    type: str = "counterexample"

    @property
    def min_value(self) -> float:
        return float(self.snapshots.min())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.type,
            "delta": self.delta,
            "worst_residual": self.min_Lu,
            "min_value": self.min_value,
            "tried": self.tried,
        }


@dataclass
class MpVerdict:
    lambda1: float
    strong_mp: bool
    strict_mp: bool
    inconclusive: bool
    certificate: Any

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda1": self.lambda1,
            "strong_mp": self.strong_mp,
            "strict_mp": self.strict_mp,
            "inconclusive": self.inconclusive,
            "certificate": self.certificate.to_dict(),
        }


def classify(lambda1: float) -> Dict[str, bool]:
    return {
        "strong_mp": lambda1 >= -DEAD_BAND,
        "strict_mp": lambda1 > DEAD_BAND,
        "inconclusive": abs(lambda1) <= DEAD_BAND,
    }


def _sample_count(result: EigenResult, mt_samples: int) -> int:
    # sample on snapshot nodes whenever possible
    m = result.steps_per_period
    return math.gcd(m, int(mt_samples)) or 1


def mp_verdict(
    spec: OperatorSpec,
    cfg: Optional[EvolutionConfig] = None,
    mt_samples: int = 64,
) -> MpVerdict:
    """Decide the strong and strict maximum principles and certify the decision."""
    cfg = cfg or EvolutionConfig()
    result = principal_spectrum_point(spec, cfg)
    flags = classify(result.lambda1)
    if flags["inconclusive"]:
        logger.warning("lambda1=%.3e is inside the dead band; inconclusive at this resolution", result.lambda1)

    if flags["strong_mp"]:
        phi = eigen_test_function(spec, result, cfg)
        worst = -math.inf
        for t in period_nodes(spec.period, _sample_count(result, mt_samples)):
            worst = max(worst, float(apply_L(spec, phi, t).max()))
        certificate = SupersolutionCertificate(
            worst_residual=worst,
            min_value=result.min_value,
            type="inconclusive" if flags["inconclusive"] else "supersolution",
        )
    else:
        certificate = build_counterexample(spec, cfg, result=result, mt_samples=mt_samples)

    return MpVerdict(lambda1=result.lambda1, certificate=certificate, **flags)


@dataclass
class SupersolutionCheck:
    """Outcome of check_supersolution.

    Attributes:
        max_residual: max of L[phi] over the samples.
        min_phi: min of phi over the samples.
        is_supersolution: residual < 0 (strict) or phi > 0 and residual <= 0.
        implies: the spectral conclusion, "lambda1 > 0", "lambda1 >= 0" or None.
        consistent_with_theorems: the computed lambda1 agrees with the conclusion.
    """

    max_residual: float
    min_phi: float
    strict: bool
    is_supersolution: bool
    implies: Optional[str]
    lambda1: float
    consistent_with_theorems: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_residual": self.max_residual,
            "min_phi": self.min_phi,
            "strict": self.strict,
            "is_supersolution": self.is_supersolution,
            "implies": self.implies,
            "lambda1": self.lambda1,
            "consistent_with_theorems": self.consistent_with_theorems,
        }


def check_supersolution(
    spec: OperatorSpec,
    phi: SpaceTimeFunction,
    strict: bool,
    mt_samples: int = 64,
    cfg: Optional[EvolutionConfig] = None,
    lambda1: Optional[float] = None,
) -> SupersolutionCheck:
    """Sign of L[phi] and what it says about lambda1.

    Raises:
        MissingTimeDerivative: if phi varies in time without a derivative.
    """
    residual, lowest = -math.inf, math.inf
    times = [0.0] if (phi.time_constant and spec.is_autonomous) else period_nodes(spec.period, int(mt_samples))
    for t in times:
        residual = max(residual, float(apply_L(spec, phi, t).max()))
        lowest = min(lowest, float(phi.value(t).min()))
    if not (math.isfinite(residual) and math.isfinite(lowest)):
        raise NonlocalSpectraError(f"{phi.name} is not finite on the samples")

    if lambda1 is None:
        lambda1 = principal_spectrum_point(spec, cfg).lambda1

    if strict:
        is_super = residual < 0
        implies = "lambda1 > 0" if is_super else None
        consistent = (lambda1 > -DEAD_BAND) if is_super else True
    else:
        is_super = lowest > 0 and residual <= 0
        implies = "lambda1 >= 0" if is_super else None
        consistent = (lambda1 >= -DEAD_BAND) if is_super else True

    if not consistent:
        logger.warning(
            "%s is a super-solution but lambda1=%.6g contradicts %s", phi.name, lambda1, implies
        )
    return SupersolutionCheck(
        max_residual=residual,
        min_phi=lowest,
        strict=bool(strict),
        is_supersolution=bool(is_super),
        implies=implies,
        lambda1=float(lambda1),
        consistent_with_theorems=bool(consistent),
    )


def cutoff_schedule(h: float, inradius: float) -> List[float]:
    """h 2^p for p = P .. 0, with h 2^P the largest not exceeding the inradius."""
    widths = [h]
    while widths[-1] * 2 <= inradius:
        widths.append(widths[-1] * 2)
    return widths[::-1]


def build_counterexample(
    spec: OperatorSpec,
    cfg: Optional[EvolutionConfig] = None,
    result: Optional[EigenResult] = None,
    mt_samples: int = 64,
) -> Counterexample:
    """Cut the eigenfunction off near the boundary until L[eta phi] > 0 everywhere.

    Raises:
        EigenvalueNotNegative: if lambda1 >= -1e-8.
        ConstructionFailed: if no cutoff width in the schedule works.
    """
    cfg = cfg or EvolutionConfig()
    result = result or principal_spectrum_point(spec, cfg)
    if result.lambda1 >= -DEAD_BAND:
        raise EigenvalueNotNegative(
            f"a counterexample needs lambda1 < 0, got lambda1={result.lambda1:.6g}"
        )

    domain = spec.domain
    phi = eigen_test_function(spec, result, cfg)
    dist = domain.distance_to_boundary()
    times = period_nodes(spec.period, _sample_count(result, mt_samples))
    if spec.is_autonomous:
        times = times[:1]

    tried: List[float] = []
    worst_value, worst_sample = -math.inf, {}
    for delta in cutoff_schedule(domain.h, domain.inradius):
        tried.append(delta)
        eta = np.clip(dist / delta, 0.0, 1.0)
        u = phi.scaled(eta, name=f"cutoff eigenfunction (delta={delta:.4g})")
        lowest, where = math.inf, (0.0, 0)
        for t in times:
            image = apply_L(spec, u, t)
            i = int(image.argmin())
            if image[i] < lowest:
                lowest, where = float(image[i]), (float(t), i)
        logger.debug("Cutoff delta=%.4g: min L[eta phi]=%.3e", delta, lowest)
        if lowest > 0:
            return Counterexample(
                delta=delta,
                min_Lu=lowest,
                eta=eta,
                snapshots=np.stack([u.value(t) for t in times]),
                times=np.asarray(times),
                tried=tried,
            )
        if lowest > worst_value or not worst_sample:
            worst_value = lowest
            worst_sample = {
                "t": where[0],
                "index": where[1],
                "point": [float(c) for c in domain.points[where[1]]],
                "delta": delta,
            }

    raise ConstructionFailed(tried[-1], worst_value, worst_sample)


@dataclass
class AuditRow:
    shift: float
    lambda1: Optional[float] = None
    strong_mp: Optional[bool] = None
    strict_mp: Optional[bool] = None
    inconclusive: Optional[bool] = None
    counterexample: Optional[bool] = None
    delta: Optional[float] = None
    min_Lu: Optional[float] = None
    error: Optional[Dict[str, str]] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def mp_audit(
    spec: OperatorSpec,
    shifts: Sequence[float],
    cfg: Optional[EvolutionConfig] = None,
    jobs: Optional[int] = None,
) -> List[AuditRow]:
    """Verdicts for the family a + s over the given shifts, in input order."""
    cfg = cfg or EvolutionConfig()

    def audit(s: float) -> AuditRow:
        row = AuditRow(shift=float(s))
        try:
            verdict = mp_verdict(spec.with_(coeff=spec.coeff.shifted(s)), cfg)
            row.lambda1 = verdict.lambda1
            row.strong_mp = verdict.strong_mp
            row.strict_mp = verdict.strict_mp
            row.inconclusive = verdict.inconclusive
            row.counterexample = isinstance(verdict.certificate, Counterexample)
            if row.counterexample:
                row.delta = verdict.certificate.delta
                row.min_Lu = verdict.certificate.min_Lu
        except NonlocalSpectraError as e:
            logger.warning("Audit shift %g failed: %s", s, e)
            row.error = e.to_dict()
        return row

    return run_points(audit, list(shifts), jobs)
