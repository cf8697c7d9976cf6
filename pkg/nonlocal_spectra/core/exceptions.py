"""
Error hierarchy for nonlocal-spectra.

Every error raised by the package derives from NonlocalSpectraError. The CLI
maps InputError subclasses to exit code 2 and every other package error to
exit code 3.
"""
from typing import Any, Dict, Optional, Sequence, Tuple


class NonlocalSpectraError(Exception):
    """Base class for all package errors."""

    def to_dict(self) -> Dict[str, Any]:
        return {"type": type(self).__name__, "message": str(self)}


class InputError(NonlocalSpectraError):
    """Invalid user input detected before any computation starts."""


class ConfigInvalid(InputError):
    """A run configuration failed validation.

    Attributes:
        pointer: JSON-pointer style path of the offending field, e.g. ``/problem/sigma``.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        self.dotted = ".".join(p for p in self.pointer.split("/") if p)
        super().__init__(f"{self.pointer} ({self.dotted or '<root>'}): {message}")


class UnknownSubcommand(InputError):
    """The CLI was invoked with a subcommand it does not know."""


class InvalidParameter(NonlocalSpectraError, ValueError):
    """A numeric parameter violates a module precondition."""


class DegenerateBounds(InvalidParameter):
    """An axis interval has zero or negative length."""


class TooFewCells(InvalidParameter):
    """An axis has fewer than two cells."""


class ShapeMismatch(InvalidParameter):
    """A grid function does not have one entry per grid point."""


class GridTooCoarse(NonlocalSpectraError):
    """The grid cannot resolve the kernel support (h > gamma * sigma)."""

    def __init__(self, h: float, reach: float, min_cells: Tuple[int, ...]):
        self.h = h
        self.reach = reach
        self.min_cells = tuple(min_cells)
        super().__init__(
            f"cell diameter h={h:.6g} exceeds kernel reach gamma*sigma={reach:.6g}; "
            f"use at least {list(self.min_cells)} cells"
        )


class MissingTimeDerivative(NonlocalSpectraError):
    """A time-varying test function was supplied without its time derivative."""


class NonpositiveTestFunction(NonlocalSpectraError):
    """A test function is not strictly positive on the sample grid."""


class KernelNotSymmetric(NonlocalSpectraError):
    """The operation needs a componentwise symmetric (even) kernel."""


class IncompatibleLimit(NonlocalSpectraError):
    """A reference limit was requested outside the setting where it is known."""


class TooLarge(NonlocalSpectraError):
    """The problem exceeds the size cap of a dense computation."""


class EigenvalueNotNegative(NonlocalSpectraError):
    """A counterexample was requested although lambda1 is not negative."""


class OutputError(NonlocalSpectraError):
    """An output directory or file could not be created or written."""


class ExpressionError(InvalidParameter):
    """A coefficient expression string could not be parsed."""


class SolverError(NonlocalSpectraError):
    """Numerical failure during a solve."""


class NegativityBreach(SolverError):
    """An evolved iterate left the nonnegative cone beyond tolerance."""

    def __init__(self, min_value: float, scale: float, steps: int):
        self.min_value = min_value
        self.scale = scale
        self.steps = steps
        super().__init__(
            f"iterate reached {min_value:.3e} (max |u| = {scale:.3e}) "
            f"with {steps} steps per period"
        )


class NoConvergence(SolverError):
    """Power iteration did not stabilise within the iteration budget."""

    def __init__(self, iterations: int, last_estimates: Sequence[float]):
        self.iterations = iterations
        self.last_estimates = tuple(last_estimates)
        super().__init__(
            f"no convergence after {iterations} power iterations; "
            f"last radius estimates {list(self.last_estimates)}"
        )


class ConstructionFailed(SolverError):
    """No cutoff width produced a valid maximum-principle counterexample."""

    def __init__(self, finest_delta: float, worst_value: float,
                 worst_sample: Optional[Dict[str, Any]] = None):
        self.finest_delta = finest_delta
        self.worst_value = worst_value
        self.worst_sample = worst_sample or {}
        super().__init__(
            f"no cutoff width down to delta={finest_delta:.4g} gave L[eta*phi] > 0; "
            f"worst value {worst_value:.3e} at {self.worst_sample}"
        )
