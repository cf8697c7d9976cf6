"""
Principal spectrum point of time-periodic nonlocal dispersal operators.

lambda1 is read off the period map: with Phi(T, 0) the solution operator of
u' = A(t) u over one period, lambda1 = -ln r(Phi(T, 0)) / T where r is the
Perron root. The period map is discretized with the classical fourth-order
Runge-Kutta method; step counts are chosen so that every stage stays in the
nonnegative cone.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from .coefficient import period_nodes
from .exceptions import (
    InvalidParameter,
    KernelNotSymmetric,
    NegativityBreach,
    NoConvergence,
    NonpositiveTestFunction,
    TooLarge,
)
from .geometry import Domain
from .kernel import Kernel, build_kernel_matrix
from .operator import (
    Boundary,
    OperatorSpec,
    SpaceTimeFunction,
    apply_L,
    assemble_generator,
    lambda_star,
)

logger = logging.getLogger(__name__)

DENSE_AUTONOMOUS_CAP = 200
DENSE_PERIODIC_CAP = 60
POINCARE_CAP = 500
CERTIFY_SLACK = 1e-10
_GROWTH_CACHE_LIMIT = 5_000_000


class EvolutionConfig(BaseModel):
    """Time stepping and power iteration settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    steps_per_period: Optional[int] = Field(default=None, ge=1)
    min_steps: int = Field(default=128, ge=1)
    max_steps: int = Field(default=2 ** 20, ge=1)
    power_tol: float = Field(default=1e-10, gt=0)
    max_power_iters: int = Field(default=10000, ge=1)
    positivity_tol: float = Field(default=1e-12, ge=0)
    seed: int = 0
    assemble_limit: int = Field(default=200, ge=0)
    squarings: int = Field(default=4, ge=0, le=10)
    principal_margin: float = Field(default=1e-8, ge=0)


@dataclass(eq=False)
class EigenResult:
    """Outcome of a principal spectrum point computation.

    Attributes:
        lambda1: principal spectrum point, -log_radius / T.
        radius: Perron root of the discrete period map.
        log_radius: ln radius, kept separately so huge radii stay usable.
        eigenfunction: (m + 1, n) snapshots at the period nodes, max equal to 1.
        times: the m + 1 period nodes.
        eigenvector: Perron vector of the period map, max equal to 1.
        periodicity_residual: max |phi(T) - phi(0)|.
        algebraic_residual: max |A phi + lambda1 phi|, autonomous problems only.
        is_principal: lambda1 < lambda_star - margin.
        lambda_star: the principality threshold.
        iters: power iterations performed.
        steps_per_period: RK4 steps per period actually used.
        radius_bracket: Collatz-Wielandt bounds on the radius from the Perron vector.
        method: "assembled" or "matrix_free".
    """

    lambda1: float
    radius: float
    log_radius: float
    eigenfunction: np.ndarray
    times: np.ndarray
    eigenvector: np.ndarray
    periodicity_residual: float
    algebraic_residual: Optional[float]
    is_principal: bool
    lambda_star: float
    iters: int
    steps_per_period: int
    radius_bracket: Tuple[float, float]
    method: str
    elapsed: float = 0.0

    @property
    def min_value(self) -> float:
        return float(self.eigenfunction.min())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda1": self.lambda1,
            "radius": self.radius,
            "is_principal": self.is_principal,
            "lambda_star": self.lambda_star,
            "iters": self.iters,
            "steps_per_period": self.steps_per_period,
            "method": self.method,
            "radius_bracket": list(self.radius_bracket),
            "residuals": {
                "periodicity": self.periodicity_residual,
                "algebraic": self.algebraic_residual,
            },
            "eigenfunction_min": self.min_value,
        }


class _Propagator:
    """RK4 propagation of u' = A(t) u with a fixed number of steps per period."""

    def __init__(self, spec: OperatorSpec, steps: int, positivity_tol: float):
        self.spec = spec
        self.steps = int(steps)
        self.period = spec.period
        self.positivity_tol = positivity_tol
        self._dispersal = spec.dispersal
        self._static = spec.growth(0.0) if spec.is_autonomous else None
        self._cache: Dict[int, np.ndarray] = {}
        self._cacheable = 2 * self.steps * spec.size <= _GROWTH_CACHE_LIMIT

    def growth(self, t: float) -> np.ndarray:
        if self._static is not None:
            return self._static
        if self._cacheable:
            half = self.period / (2 * self.steps)
            slot = (t % self.period) / half
            key = int(round(slot))
            if abs(slot - key) < 1e-9:
                key %= 2 * self.steps
                values = self._cache.get(key)
                if values is None:
                    values = self._cache[key] = self.spec.growth(key * half)
                return values
        return self.spec.growth(t)

    def rhs(self, t: float, u: np.ndarray) -> np.ndarray:
        g = self.growth(t)
        if u.ndim == 2:
            g = g[:, None]
        return self._dispersal @ u + g * u

    def run(self, u0: np.ndarray, t0: float, t1: float) -> np.ndarray:
        u = np.array(u0, dtype=float)
        span = float(t1) - float(t0)
        if span < 0:
            raise InvalidParameter(f"evolve needs t1 >= t0, got t0={t0}, t1={t1}")
        if span == 0:
            return u

        n_steps = max(1, int(math.ceil(self.steps * span / self.period - 1e-9)))
        dt = span / n_steps
        watch = bool(np.all(u >= 0))
        for i in range(n_steps):
            t = t0 + i * dt
            k1 = self.rhs(t, u)
            k2 = self.rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
            k3 = self.rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
            k4 = self.rhs(t + dt, u + dt * k3)
            u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if watch:
                lowest = float(u.min())
                if lowest < 0:
                    scale = float(np.abs(u).max())
                    if lowest < -self.positivity_tol * scale:
                        raise NegativityBreach(lowest, scale, self.steps)
        return u


def resolve_steps(spec: OperatorSpec, cfg: EvolutionConfig) -> int:
    """Steps per period m with (T / m) max |A_ii(t)| <= 0.5 at every stage time.

    Raises:
        TooLarge: if m would exceed ``cfg.max_steps``.
    """
    m = max(cfg.min_steps, cfg.steps_per_period or 0)
    base = spec.dispersal.diagonal()
    T = spec.period

    def peak(steps: int) -> float:
        if spec.is_autonomous:
            return float(np.abs(base + spec.growth(0.0)).max())
        times = period_nodes(T, 2 * steps)
        return max(float(np.abs(base + spec.growth(t)).max()) for t in times)

    while (T / m) * peak(m) > 0.5:
        m *= 2
        logger.debug("Doubling steps per period to %d", m)
        if m > cfg.max_steps:
            raise TooLarge(
                f"stable RK4 step needs more than {cfg.max_steps} steps per period"
            )
    return m


def evolve(
    spec: OperatorSpec,
    cfg: EvolutionConfig,
    u0: Any,
    t0: float,
    t1: float,
) -> np.ndarray:
    """Solve u' = A(t) u from t0 to t1.

    Args:
        spec: operator.
        cfg: evolution settings.
        u0: (n,) grid function, or an (n, p) block of them.
        t0: start time.
        t1: end time, >= t0.

    Returns:
        The evolved grid function(s).

    Raises:
        InvalidParameter: if t1 < t0 or u0 is not finite.
        NegativityBreach: if a nonnegative start leaves the cone even after
            one retry with doubled steps.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape[0] != spec.size:
        raise InvalidParameter(f"u0 has {u0.shape[0]} rows, grid has {spec.size} points")
    if not np.all(np.isfinite(u0)):
        raise InvalidParameter("u0 has non-finite entries")

    m = resolve_steps(spec, cfg)
    try:
        return _Propagator(spec, m, cfg.positivity_tol).run(u0, t0, t1)
    except NegativityBreach as e:
        logger.warning("%s; retrying with %d steps per period", e, 2 * m)
        return _Propagator(spec, 2 * m, cfg.positivity_tol).run(u0, t0, t1)


def monodromy(spec: OperatorSpec, cfg: EvolutionConfig, steps: Optional[int] = None) -> np.ndarray:
    """Dense period map Phi(T, 0), one column per basis vector."""
    m = steps or resolve_steps(spec, cfg)
    return _Propagator(spec, m, cfg.positivity_tol).run(np.eye(spec.size), 0.0, spec.period)


def _power(apply, n: int, cfg: EvolutionConfig) -> Tuple[np.ndarray, float, int]:
    """Max-normalized power iteration from the all-ones vector.

    Returns:
        (Perron vector, ln of the radius estimate, iterations).
    """
    v = np.ones(n)
    estimates: List[float] = []
    for iteration in range(1, cfg.max_power_iters + 1):
        w = apply(v)
        r = float(w.max())
        if not r > 0:
            raise NoConvergence(iteration, estimates[-2:] + [r])
        v = w / r
        estimates.append(r)
        if iteration % 500 == 0:
            logger.debug("Power iteration %d: radius estimate %.15g", iteration, r)
        if len(estimates) >= 2 and abs(estimates[-1] - estimates[-2]) <= cfg.power_tol * r:
            return v, math.log(r), iteration
    raise NoConvergence(cfg.max_power_iters, estimates[-2:])


def _assembled_power(M: np.ndarray, cfg: EvolutionConfig) -> Tuple[np.ndarray, float, int]:
    scales = [float(np.abs(M).max())]
    P = M / scales[0]
    for _ in range(cfg.squarings):
        P = P @ P
        s = float(np.abs(P).max())
        scales.append(s)
        P /= s

    v, log_r, iters = _power(lambda u: P @ u, M.shape[0], cfg)
    # unwind: ln r(P_j) = (ln r(P_{j+1}) + ln s_{j+1}) / 2
    for s in reversed(scales[1:]):
        log_r = 0.5 * (log_r + math.log(s))
    return v, log_r + math.log(scales[0]), iters


def principal_spectrum_point(spec: OperatorSpec, cfg: Optional[EvolutionConfig] = None) -> EigenResult:
    """lambda1 and the periodic principal eigenfunction.

    Raises:
        NoConvergence: if power iteration does not stabilise within
            ``cfg.max_power_iters``.
        NegativityBreach: if positivity fails even with doubled steps.
    """
    cfg = cfg or EvolutionConfig()
    m = resolve_steps(spec, cfg)
    try:
        return _principal(spec, cfg, m)
    except NegativityBreach as e:
        logger.warning("%s; retrying with %d steps per period", e, 2 * m)
        return _principal(spec, cfg, 2 * m)


def _principal(spec: OperatorSpec, cfg: EvolutionConfig, m: int) -> EigenResult:
    started = time.perf_counter()
    n = spec.size
    T = spec.period
    logger.info(
        "Computing principal spectrum point: n=%d, m=%d, D=%g, sigma=%g, k=%g, %s",
        n, m, spec.D, spec.sigma, spec.k, spec.boundary.value,
    )
    prop = _Propagator(spec, m, cfg.positivity_tol)

    if n <= cfg.assemble_limit:
        M = prop.run(np.eye(n), 0.0, T)
        v, log_radius, iters = _assembled_power(M, cfg)
        image = M @ v
        method = "assembled"
    else:
        v, log_radius, iters = _power(lambda u: prop.run(u, 0.0, T), n, cfg)
        image = prop.run(v, 0.0, T)
        method = "matrix_free"

    ratios = image / v
    bracket = (float(ratios.min()), float(ratios.max()))
    lambda1 = -log_radius / T

    times = T * np.arange(m + 1) / m
    snapshots = np.empty((m + 1, n))
    snapshots[0] = v
    u = v
    for j in range(1, m + 1):
        u = prop.run(u, times[j - 1], times[j])
        snapshots[j] = math.exp(lambda1 * times[j]) * u
    snapshots /= snapshots.max()

    algebraic = None
    if spec.is_autonomous:
        phi = snapshots[0]
        algebraic = float(np.abs(assemble_generator(spec, 0.0).matvec(phi) + lambda1 * phi).max())

    threshold = lambda_star(spec)
    is_principal = lambda1 < threshold - cfg.principal_margin
    if not is_principal:
        logger.warning(
            "lambda1=%.10g is not below lambda*=%.10g; Perron data may not be a principal eigenpair",
            lambda1, threshold,
        )
    elif snapshots.min() <= 0:
        logger.warning("Principal eigenfunction has nonpositive snapshot entries")

    elapsed = time.perf_counter() - started
    logger.info("lambda1=%.12g after %d iterations (%s, %.2fs)", lambda1, iters, method, elapsed)

    snapshots.setflags(write=False)
    return EigenResult(
        lambda1=lambda1,
        radius=math.exp(log_radius) if log_radius < 709 else math.inf,
        log_radius=log_radius,
        eigenfunction=snapshots,
        times=times,
        eigenvector=v,
        periodicity_residual=float(np.abs(snapshots[-1] - snapshots[0]).max()),
        algebraic_residual=algebraic,
        is_principal=bool(is_principal),
        lambda_star=threshold,
        iters=iters,
        steps_per_period=m,
        radius_bracket=bracket,
        method=method,
        elapsed=elapsed,
    )


def dense_oracle(spec: OperatorSpec, cfg: Optional[EvolutionConfig] = None) -> float:
    """lambda1 from a dense eigensolve, independent of power iteration.

    Autonomous problems use the eigenvalues of A; periodic ones the eigenvalues
    of the explicitly assembled period map.

    Raises:
        TooLarge: above 200 points (autonomous) or 60 points (periodic).
    """
    cfg = cfg or EvolutionConfig()
    n = spec.size
    if spec.is_autonomous:
        if n > DENSE_AUTONOMOUS_CAP:
            raise TooLarge(f"dense oracle handles at most {DENSE_AUTONOMOUS_CAP} points, got {n}")
        mu = scipy.linalg.eigvals(assemble_generator(spec, 0.0).dense())
        return float(-np.max(mu.real))

    if n > DENSE_PERIODIC_CAP:
        raise TooLarge(f"periodic dense oracle handles at most {DENSE_PERIODIC_CAP} points, got {n}")
    M = monodromy(spec, cfg)
    rho = float(np.max(np.abs(scipy.linalg.eigvals(M))))
    return -math.log(rho) / spec.period


def _sample_times(spec: OperatorSpec, phi: SpaceTimeFunction, mt_samples: int) -> np.ndarray:
    if int(mt_samples) < 1:
        raise InvalidParameter(f"mt_samples must be positive, got {mt_samples}")
    if phi.time_constant and spec.is_autonomous:
        return np.zeros(1)
    return period_nodes(spec.period, int(mt_samples))


def _residual_samples(spec: OperatorSpec, phi: SpaceTimeFunction, mt_samples: int):
    """Yield (t, phi(t), L[phi](t)) over the sample times, checking positivity."""
    for t in _sample_times(spec, phi, mt_samples):
        values = phi.value(t)
        lowest = float(values.min())
        if not lowest > 0:
            index = int(values.argmin())
            raise NonpositiveTestFunction(
                f"{phi.name} has value {lowest:.3e} at t={t:.6g}, point {index}"
            )
        yield float(t), values, apply_L(spec, phi, t)


def collatz_wielandt_bounds(
    spec: OperatorSpec, phi: SpaceTimeFunction, mt_samples: int = 64
) -> Tuple[float, float]:
    """(min, max) of -L[phi] / phi over the sampled space-time grid.

    Raises:
        NonpositiveTestFunction: if phi is not strictly positive on the samples.
    """
    lower, upper = math.inf, -math.inf
    for _, values, image in _residual_samples(spec, phi, mt_samples):
        ratio = -image / values
        lower = min(lower, float(ratio.min()))
        upper = max(upper, float(ratio.max()))
    return lower, upper


class Direction(str, Enum):
    """Declared sign of (L + lambda)[phi]."""

    SUBSOLUTION = "subsolution"
    SUPERSOLUTION = "supersolution"

    @classmethod
    def _missing_(cls, value):
        aliases = {"le": cls.SUBSOLUTION, "<=": cls.SUBSOLUTION, "ge": cls.SUPERSOLUTION, ">=": cls.SUPERSOLUTION}
        return aliases.get(str(value).lower())


@dataclass
class TestPairVerdict:
    """Whether (lambda, phi) is a test pair, with the worst sample."""

    __test__ = False

    holds: bool
    direction: Direction
    lambda_: float
    worst_residual: float
    t: float
    index: int
    point: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "direction": self.direction.value,
            "lambda": self.lambda_,
            "worst_residual": self.worst_residual,
            "location": {"t": self.t, "index": self.index, "point": self.point},
        }


def certify_test_pair(
    spec: OperatorSpec,
    lambda_: float,
    phi: SpaceTimeFunction,
    direction: Any,
    mt_samples: int = 64,
    slack: float = CERTIFY_SLACK,
) -> TestPairVerdict:
    """Check the sign of (L + lambda)[phi] at every sample.

    A subsolution pair needs (L + lambda)[phi] <= 0, a supersolution pair >= 0.
    The reported residual is the worst one: the maximum for subsolutions and
    the minimum for supersolutions.

    Raises:
        NonpositiveTestFunction: if phi is not strictly positive on the samples.
    """
    direction = Direction(direction)
    sub = direction is Direction.SUBSOLUTION
    worst = -math.inf if sub else math.inf
    where = (0.0, 0)
    for t, values, image in _residual_samples(spec, phi, mt_samples):
        residual = image + lambda_ * values
        i = int(residual.argmax() if sub else residual.argmin())
        value = float(residual[i])
        if (sub and value > worst) or (not sub and value < worst):
            worst, where = value, (t, i)

    holds = worst <= slack if sub else worst >= -slack
    return TestPairVerdict(
        holds=bool(holds),
        direction=direction,
        lambda_=float(lambda_),
        worst_residual=worst,
        t=where[0],
        index=where[1],
        point=[float(c) for c in spec.domain.points[where[1]]],
    )


class QuadraticFormChecker:
    """The weighted nonlocal Dirichlet form and its double-sum identity.

    For grid functions f,
        <M f, f>_w = sum_i w_i f_i ((diag(d) - K) f)_i
                   = 1/2 sum_ij w_i K_ij (f_j - f_i)^2.
    """

    def __init__(self, weights: np.ndarray, K: np.ndarray, degree: np.ndarray, constant: float):
        self.weights = weights
        self.K = K
        self.degree = degree
        self.constant = constant
        S = weights[:, None] * (np.diag(degree) - K)
        self.matrix = 0.5 * (S + S.T)

    def form(self, f: Any) -> float:
        f = np.asarray(f, dtype=float)
        return float(f @ self.matrix @ f)

    def double_sum(self, f: Any) -> float:
        f = np.asarray(f, dtype=float)
        diff = f[None, :] - f[:, None]
        return float(0.5 * np.sum(self.weights[:, None] * self.K * diff * diff))

    def identity_residual(self, f: Any) -> float:
        return abs(self.form(f) - self.double_sum(f))

    def norm2(self, f: Any) -> float:
        f = np.asarray(f, dtype=float)
        return float(self.weights @ (f * f))

    def project_mean_zero(self, f: Any) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return f - (self.weights @ f) / self.weights.sum()

    def satisfies(self, f: Any, slack: float = 1e-10) -> bool:
        """Poincare inequality for the mean-zero projection of f."""
        g = self.project_mean_zero(f)
        return self.form(g) >= (self.constant - slack) * self.norm2(g)


def poincare_constant(domain: Domain, kernel: Kernel, sigma: float) -> Tuple[float, QuadraticFormChecker]:
    """Best constant C in form(f) >= C ||f||_w^2 over weighted-mean-zero f.

    Raises:
        KernelNotSymmetric: for kernels that are not even.
        TooLarge: above 500 points.
        GridTooCoarse: if the grid does not resolve gamma * sigma.
    """
    if not kernel.even:
        raise KernelNotSymmetric(f"{kernel.family.value} with shift {kernel.shift} is not even")
    if domain.size > POINCARE_CAP:
        raise TooLarge(f"Poincare constant handles at most {POINCARE_CAP} points, got {domain.size}")

    km = build_kernel_matrix(domain, kernel, sigma)
    w = np.asarray(domain.weights, dtype=float)
    checker = QuadraticFormChecker(w, km.dense(), np.asarray(km.degree), 0.0)
    mu = scipy.linalg.eigh(checker.matrix, np.diag(w), eigvals_only=True)
    checker.constant = float(mu[1])
    logger.info("Poincare constant C=%.10g (n=%d, sigma=%g)", checker.constant, domain.size, sigma)
    return checker.constant, checker


def growth_rates(spec: OperatorSpec, cfg: Optional[EvolutionConfig] = None, periods: int = 8) -> np.ndarray:
    """ln ||Phi(jT, 0)||_inf / (jT) for j = 1 .. periods; tends to -lambda1."""
    cfg = cfg or EvolutionConfig()
    if int(periods) < 1:
        raise InvalidParameter(f"periods must be positive, got {periods}")
    prop = _Propagator(spec, resolve_steps(spec, cfg), cfg.positivity_tol)
    T = spec.period
    u = np.ones(spec.size)
    log_norm = 0.0
    rates = []
    for j in range(1, int(periods) + 1):
        u = prop.run(u, 0.0, T)
        top = float(u.max())
        log_norm += math.log(top)
        u /= top
        rates.append(log_norm / (j * T))
    return np.array(rates)


def eigen_test_function(
    spec: OperatorSpec, result: EigenResult, cfg: Optional[EvolutionConfig] = None
) -> SpaceTimeFunction:
    """The computed eigenfunction as a test function.

    Between period nodes the snapshot is propagated; the time derivative is
    (A(t) + lambda1) phi(t), so L[phi] = -lambda1 phi.
    """
    cfg = cfg or EvolutionConfig()
    lam = result.lambda1
    if spec.is_autonomous:
        return SpaceTimeFunction.stationary(result.eigenfunction[0], name="eigenfunction")

    prop = _Propagator(spec, result.steps_per_period, cfg.positivity_tol)
    T = spec.period
    m = result.steps_per_period

    def value(t: float) -> np.ndarray:
        phase = t % T
        j = min(int(math.floor(phase / T * m + 1e-9)), m)
        base = result.times[j]
        if phase - base <= 1e-12 * T:
            return np.array(result.eigenfunction[j])
        return math.exp(lam * (phase - base)) * prop.run(result.eigenfunction[j], base, phase)

    def derivative(t: float) -> np.ndarray:
        phi = value(t)
        return assemble_generator(spec, t).matvec(phi) + lam * phi

    return SpaceTimeFunction(value, derivative, name="eigenfunction")


def ode_test_function(spec: OperatorSpec) -> SpaceTimeFunction:
    """phi(t, x) = exp(integral_0^t a(s, x) ds - t a_T(x)), the periodic ODE solution.

    phi_t = (a - a_T) phi, with a_T the exact time average.
    """
    coeff = spec.coeff
    points = spec.domain.points
    T = spec.period
    a_T = coeff.exact_time_average(points)

    def value(t: float) -> np.ndarray:
        phase = t % T
        return np.exp(coeff.cumulative_integral(phase, points) - phase * a_T)

    def derivative(t: float) -> np.ndarray:
        return (coeff.evaluate(t, points) - a_T) * value(t)

    return SpaceTimeFunction(value, derivative, name="ode solution")


def boundary_gap(spec: OperatorSpec, cfg: Optional[EvolutionConfig] = None) -> float:
    """lambda1 with Dirichlet minus lambda1 with Neumann; nonnegative."""
    cfg = cfg or EvolutionConfig()
    dirichlet = principal_spectrum_point(spec.with_(boundary=Boundary.DIRICHLET), cfg)
    neumann = principal_spectrum_point(spec.with_(boundary=Boundary.NEUMANN), cfg)
    return dirichlet.lambda1 - neumann.lambda1
