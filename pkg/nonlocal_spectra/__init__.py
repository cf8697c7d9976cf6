"""
nonlocal-spectra - principal spectrum of time-periodic nonlocal dispersal operators

Computes the principal spectrum point lambda1 of

    L[u] = -u_t + (D / sigma^k) (int_Omega J_sigma(x - y) u(y) dy - (mass) u) + a(t, x) u

on bounded intervals and rectangles, with Neumann or Dirichlet dispersal, and
checks the characterizations, bounds and limits known for it.

Example:
    >>> from nonlocal_spectra import build_domain, make_kernel, build_coefficient
    >>> from nonlocal_spectra import OperatorSpec, principal_spectrum_point
    >>> spec = OperatorSpec(
    ...     domain=build_domain(1, [(0.0, 1.0)], [40]),
    ...     kernel=make_kernel("epanechnikov1d"),
    ...     coeff=build_coefficient("separable", b="cos(pi*x)", c="sin(2*pi*t)"),
    ...     D=1.0,
    ...     sigma=1.0,
    ... )
    >>> principal_spectrum_point(spec).lambda1  # doctest: +SKIP
"""
import logging

# Version information
__version__ = "0.1.0"
__license__ = "MIT"

from .config.settings import Settings, get_settings, update_settings
from .core.asymptotics import (
    LimitReference,
    SweepResult,
    small_dispersal_bracket,
    sweep_dispersal_range,
    sweep_dispersal_rate,
    verify_upper_bound,
)
from .core.coefficient import (
    Coefficient,
    CoefficientForm,
    CoefficientStats,
    build_coefficient,
    constant_coefficient,
    tabulated_coefficient,
    time_average,
)
from .core.engine import SpectraEngine
from .core.exceptions import (
    ConfigInvalid,
    ConstructionFailed,
    DegenerateBounds,
    EigenvalueNotNegative,
    OutputError,
    ExpressionError,
    GridTooCoarse,
    IncompatibleLimit,
    InputError,
    InvalidParameter,
    KernelNotSymmetric,
    MissingTimeDerivative,
    NegativityBreach,
    NoConvergence,
    NonlocalSpectraError,
    NonpositiveTestFunction,
    ShapeMismatch,
    SolverError,
    TooFewCells,
    TooLarge,
    UnknownSubcommand,
)
from .core.geometry import Domain, build_domain, integrate
from .core.kernel import Kernel, KernelFamily, build_kernel_matrix, eval_kernel, make_kernel
from .core.maxprinciple import (
    MpVerdict,
    build_counterexample,
    check_supersolution,
    mp_audit,
    mp_verdict,
)
from .core.operator import (
    Boundary,
    OperatorSpec,
    SpaceTimeFunction,
    apply_L,
    assemble_generator,
    lambda_star,
)
from .core.parser import load_config
from .core.spectral import (
    EigenResult,
    EvolutionConfig,
    boundary_gap,
    certify_test_pair,
    collatz_wielandt_bounds,
    dense_oracle,
    eigen_test_function,
    evolve,
    growth_rates,
    ode_test_function,
    poincare_constant,
    principal_spectrum_point,
)

# Public API
__all__ = [
    "__version__",
    # geometry and kernels
    "Domain", "build_domain", "integrate",
    "Kernel", "KernelFamily", "make_kernel", "eval_kernel", "build_kernel_matrix",
    # coefficients
    "Coefficient", "CoefficientForm", "CoefficientStats",
    "build_coefficient", "constant_coefficient", "tabulated_coefficient", "time_average",
    # operators
    "Boundary", "OperatorSpec", "SpaceTimeFunction",
    "assemble_generator", "apply_L", "lambda_star",
    # spectral
    "EvolutionConfig", "EigenResult", "evolve", "principal_spectrum_point", "dense_oracle",
    "collatz_wielandt_bounds", "certify_test_pair", "poincare_constant", "growth_rates",
    "eigen_test_function", "ode_test_function", "boundary_gap",
    # asymptotics
    "LimitReference", "SweepResult", "sweep_dispersal_rate", "sweep_dispersal_range",
    "verify_upper_bound", "small_dispersal_bracket",
    # maximum principles
    "MpVerdict", "mp_verdict", "check_supersolution", "build_counterexample", "mp_audit",
    # errors
    "NonlocalSpectraError", "InputError", "ConfigInvalid", "UnknownSubcommand",
    "InvalidParameter", "DegenerateBounds", "TooFewCells", "ShapeMismatch", "ExpressionError",
    "GridTooCoarse", "MissingTimeDerivative", "NonpositiveTestFunction", "KernelNotSymmetric",
    "IncompatibleLimit", "TooLarge", "EigenvalueNotNegative", "OutputError",
    "SolverError", "NegativityBreach", "NoConvergence", "ConstructionFailed",
    # runs
    "SpectraEngine", "load_config", "Settings", "get_settings", "update_settings",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
