"""
Run configuration schema.

A run file has four blocks: ``problem`` (the operator), ``solver`` (time
stepping and power iteration), ``command`` (subcommand arguments) and
``output``. Unknown keys are rejected everywhere.
"""
from typing import List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    model_validator,
)

from ..core.coefficient import CoefficientForm
from ..core.expressions import parse_expression
from ..core.kernel import KernelFamily
from ..core.operator import Boundary
from ..core.spectral import Direction, EvolutionConfig

Expression = Union[float, str]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class DomainConfig(_Block):
    dimension: Literal[1, 2] = 1
    bounds: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.0, 1.0)])
    cells: List[int] = Field(default_factory=lambda: [40])

    @model_validator(mode="after")
    def _check_axes(self) -> "DomainConfig":
        if len(self.bounds) != self.dimension or len(self.cells) != self.dimension:
            raise ValueError(
                f"expected {self.dimension} bounds and cell counts, "
                f"got {len(self.bounds)} and {len(self.cells)}"
            )
        for lo, hi in self.bounds:
            if not hi > lo:
                raise ValueError(f"interval ({lo}, {hi}) has no interior")
        if any(c < 2 for c in self.cells):
            raise ValueError(f"need at least 2 cells per axis, got {self.cells}")
        return self


class KernelConfig(_Block):
    family: KernelFamily
    gamma: Optional[PositiveFloat] = None
    shift: float = 0.0


class CoefficientConfig(_Block):
    form: CoefficientForm
    T: PositiveFloat = 1.0
    value: Optional[float] = None
    b: Optional[Expression] = None
    c: Optional[Expression] = None
    a: Optional[Expression] = None
    table: Optional[List[List[float]]] = None
    lipschitz_in_x: Optional[bool] = None

    @model_validator(mode="after")
    def _check_parts(self) -> "CoefficientConfig":
        required = {
            CoefficientForm.CONSTANT: ("value",),
            CoefficientForm.TIME_ONLY: ("c",),
            CoefficientForm.SPACE_ONLY: ("b",),
            CoefficientForm.SEPARABLE: ("b", "c"),
            CoefficientForm.PRODUCT: ("b", "c"),
            CoefficientForm.GENERAL: ("a",),
            CoefficientForm.TABULATED: ("table",),
        }[self.form]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"form {self.form.value!r} requires {missing}")
        for name in ("b", "c", "a"):
            part = getattr(self, name)
            if isinstance(part, str):
                parse_expression(part)
        return self


class ProblemConfig(_Block):
    domain: DomainConfig = Field(default_factory=DomainConfig)
    kernel: KernelConfig
    coefficient: CoefficientConfig
    D: PositiveFloat = 1.0
    sigma: PositiveFloat = 1.0
    k: NonNegativeFloat = 0.0
    boundary: Boundary = Boundary.NEUMANN


class CommandConfig(_Block):
    """Arguments for the subcommands; each one reads the fields it needs."""

    name: Optional[str] = None
    D_values: Optional[List[PositiveFloat]] = None
    sigma_values: Optional[List[PositiveFloat]] = None
    k_values: Optional[List[NonNegativeFloat]] = None
    references: Optional[List[str]] = None
    refine: bool = True
    shifts: Optional[List[float]] = None
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    direction: Direction = Direction.SUBSOLUTION
    test_function: Literal["constant", "eigenfunction", "ode"] = "constant"
    strict: bool = True
    mt_samples: int = Field(default=64, ge=1)
    growth_periods: int = Field(default=0, ge=0)
    snapshots: bool = False


class OutputConfig(_Block):
    directory: Optional[str] = None
    formats: List[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])


class RunConfig(_Block):
    problem: ProblemConfig
    solver: EvolutionConfig = Field(default_factory=EvolutionConfig)
    command: CommandConfig = Field(default_factory=CommandConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
