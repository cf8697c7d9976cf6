"""
Run Configuration Parser

Loads run files (JSON or YAML), validates them against the RunConfig schema
and builds the operator they describe. Every failure is reported as
ConfigInvalid with a JSON-pointer path to the offending field.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import ValidationError

from ..config.schemas import ProblemConfig, RunConfig
from .coefficient import coefficient_from_config
from .exceptions import ConfigInvalid, GridTooCoarse, NonlocalSpectraError
from .geometry import build_domain
from .kernel import make_kernel
from .operator import OperatorSpec

logger = logging.getLogger(__name__)


@dataclass
class ParseResult:
    """Result of parsing operation."""
    success: bool
    config: Optional[RunConfig]
    errors: List[str] = field(default_factory=list)
    pointer: Optional[str] = None


def _pointer(loc: Any) -> str:
    return "/" + "/".join(str(part) for part in loc)


def _from_validation_error(error: ValidationError) -> ConfigInvalid:
    issues = error.errors()
    first = issues[0]
    message = first["msg"]
    if len(issues) > 1:
        others = "; ".join(f"{_pointer(i['loc'])}: {i['msg']}" for i in issues[1:])
        message = f"{message} (also: {others})"
    return ConfigInvalid(_pointer(first["loc"]), message)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON or YAML run file into a dictionary.

    Raises:
        ConfigInvalid: if the file is missing, unreadable or not a mapping.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid("/", f"config file not found: {path}")

    content = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yml", ".yaml"):
            data = yaml.safe_load(content)
        else:
            data = json.loads(content)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("/", f"JSON parsing error: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigInvalid("/", f"YAML parsing error: {e}") from None

    if not isinstance(data, dict):
        raise ConfigInvalid("/", f"top level must be an object, got {type(data).__name__}")
    return data


def build_spec(problem: ProblemConfig) -> OperatorSpec:
    """Build the operator a validated problem block describes.

    Raises:
        ConfigInvalid: if a module precondition fails, pointing at the field
            responsible.
    """
    try:
        domain = build_domain(problem.domain.dimension, problem.domain.bounds, problem.domain.cells)
    except NonlocalSpectraError as e:
        raise ConfigInvalid("/problem/domain", str(e)) from None

    try:
        kernel = make_kernel(problem.kernel.family, problem.kernel.gamma, problem.kernel.shift)
    except NonlocalSpectraError as e:
        raise ConfigInvalid("/problem/kernel", str(e)) from None
    if kernel.dimension != domain.dimension:
        raise ConfigInvalid(
            "/problem/kernel/family",
            f"{kernel.family.value} is {kernel.dimension}D but the domain is {domain.dimension}D",
        )

    coefficient = problem.coefficient
    if coefficient.table is not None and any(len(row) != domain.size for row in coefficient.table):
        raise ConfigInvalid(
            "/problem/coefficient/table",
            f"every time slice needs {domain.size} values, one per grid point",
        )
    try:
        coeff = coefficient_from_config(coefficient.model_dump())
    except NonlocalSpectraError as e:
        raise ConfigInvalid("/problem/coefficient", str(e)) from None

    try:
        return OperatorSpec(
            domain=domain,
            kernel=kernel,
            coeff=coeff,
            D=problem.D,
            sigma=problem.sigma,
            k=problem.k,
            boundary=problem.boundary,
        )
    except GridTooCoarse as e:
        raise ConfigInvalid("/problem/domain/cells", str(e)) from None
    except NonlocalSpectraError as e:
        raise ConfigInvalid("/problem", str(e)) from None


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a configuration dictionary and check the operator it describes.

    Raises:
        ConfigInvalid: on the first failing field.
    """
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise _from_validation_error(e) from None
    build_spec(config.problem)
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and fully validate a run file.

    Args:
        path: JSON (.json) or YAML (.yml/.yaml) file

    Returns:
        RunConfig with defaults filled in

    Raises:
        ConfigInvalid: with a JSON-pointer path such as ``/problem/sigma``
    """
    logger.debug("Loading run configuration from %s", path)
    return parse_config(read_config_file(path))


def validate_config_dict(data: Dict[str, Any]) -> ParseResult:
    """Validate a configuration dictionary without raising."""
    try:
        return ParseResult(success=True, config=parse_config(data))
    except ConfigInvalid as e:
        return ParseResult(success=False, config=None, errors=[str(e)], pointer=e.pointer)


def config_to_dict(config: RunConfig) -> Dict[str, Any]:
    """JSON-ready dictionary that parses back to an equal RunConfig."""
    return config.model_dump(mode="json", by_alias=True)
