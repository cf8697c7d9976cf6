"""
nonlocal-spectra Core Engine

Main orchestrator for runs: maps a subcommand to the module operation, writes
its JSON/CSV payloads and a manifest listing every produced file with its
content hash.
"""

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from .. import __version__
from ..config.schemas import RunConfig
from ..config.settings import Settings, get_settings
from ..utils.file_utils import ensure_directory, get_file_hash, write_csv, write_json
from .asymptotics import SweepResult, sweep_dispersal_range, sweep_dispersal_rate
from .exceptions import ConfigInvalid, UnknownSubcommand
from .maxprinciple import check_supersolution, mp_audit, mp_verdict
from .operator import OperatorSpec, SpaceTimeFunction
from .parser import build_spec, config_to_dict
from .spectral import (
    certify_test_pair,
    collatz_wielandt_bounds,
    dense_oracle,
    eigen_test_function,
    growth_rates,
    ode_test_function,
    poincare_constant,
    principal_spectrum_point,
)

logger = logging.getLogger(__name__)

COMMANDS = ("eig", "sweep-d", "sweep-sigma", "poincare", "certify", "mp-check", "oracle-compare")
SWEEP_COLUMNS = ["param", "lambda1", "lambda_star", "is_principal"]


@dataclass
class RunContext:
    """Context object passed through one run."""
    command: str
    config: RunConfig
    spec: OperatorSpec
    output_dir: Path
    jobs: Optional[int]
    files: List[Path] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    grids: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def timed(self, name: str, operation: Callable[[], Any]) -> Any:
        started = time.perf_counter()
        try:
            return operation()
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - started


@dataclass
class RunResult:
    """Result of one run."""
    command: str
    output_dir: Path
    files: List[Path]
    payload: Dict[str, Any]
    manifest: Path
    warnings: List[str]


class SpectraEngine:
    """
    Runs subcommands against a validated RunConfig.

    Every run writes its data files and then exactly one ``manifest.json``
    into the output directory.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self._handlers: Dict[str, Callable[[RunContext], Dict[str, Any]]] = {
            "eig": self._eig,
            "sweep-d": self._sweep_d,
            "sweep-sigma": self._sweep_sigma,
            "poincare": self._poincare,
            "certify": self._certify,
            "mp-check": self._mp_check,
            "oracle-compare": self._oracle_compare,
        }

    def resolve_jobs(self, jobs: Optional[int] = None) -> Optional[int]:
        """NONLOCAL_SPECTRA_JOBS wins over the --jobs flag."""
        return Settings.from_env().jobs or jobs or self.settings.jobs

    def run(
            self,
            config: RunConfig,
            command: Optional[str] = None,
            output_dir: Optional[Union[str, Path]] = None,
            jobs: Optional[int] = None,
    ) -> RunResult:
        """
        Execute one subcommand.

        Args:
            config: validated run configuration
            command: subcommand name; defaults to ``config.command.name``
            output_dir: destination; defaults to the config, then the settings
            jobs: worker count for sweeps and audits

        Returns:
            RunResult: the payload and the files written

        Raises:
            UnknownSubcommand: for names outside COMMANDS
            ConfigInvalid: when the command block lacks a required argument
        """
        command = command or config.command.name
        if command not in self._handlers:
            raise UnknownSubcommand(
                f"unknown subcommand {command!r}; expected one of {', '.join(COMMANDS)}"
            )

        target = output_dir or config.output.directory or self.settings.output_dir
        context = RunContext(
            command=command,
            config=config,
            spec=build_spec(config.problem),
            output_dir=ensure_directory(target),
            jobs=self.resolve_jobs(jobs),
        )
        logger.info("Running %s into %s", command, context.output_dir)

        payload = self._handlers[command](context)
        payload["config_echo"] = config_to_dict(config)
        if "json" in config.output.formats:
            stem = command.replace("-", "_")
            context.files.append(write_json(context.output_dir / f"{stem}.json", payload))

        manifest = self._write_manifest(context)
        for warning in context.warnings:
            logger.warning(warning)
        return RunResult(
            command=command,
            output_dir=context.output_dir,
            files=list(context.files),
            payload=payload,
            manifest=manifest,
            warnings=list(context.warnings),
        )

    def _write_manifest(self, context: RunContext) -> Path:
        manifest = {
            "tool": "nonlocal-spectra",
            "version": __version__,
            "command": context.command,
            "created": datetime.now(timezone.utc).isoformat(),
            "seed": context.config.solver.seed,
            "jobs": context.jobs,
            "config": config_to_dict(context.config),
            "files": [
                {"name": path.name, "sha256": get_file_hash(path), "bytes": path.stat().st_size}
                for path in context.files
            ],
            "timings": context.timings,
            "grids": context.grids or [self._grid(context.spec)],
            "warnings": context.warnings,
        }
        return write_json(context.output_dir / "manifest.json", manifest)

    @staticmethod
    def _grid(spec: OperatorSpec) -> Dict[str, Any]:
        return {"cells": list(spec.domain.cells), "n": spec.size}

    @staticmethod
    def _require(value: Any, pointer: str) -> Any:
        if value is None:
            raise ConfigInvalid(pointer, "required by this subcommand")
        return value

    def _eig(self, context: RunContext) -> Dict[str, Any]:
        cfg = context.config.solver
        spec = context.spec
        result = context.timed("principal_spectrum_point", lambda: principal_spectrum_point(spec, cfg))
        payload = result.to_dict()
        if not result.is_principal:
            context.warnings.append(
                f"lambda1={result.lambda1:.10g} is not below lambda*={result.lambda_star:.10g}"
            )

        periods = context.config.command.growth_periods
        if periods:
            rates = context.timed("growth_rates", lambda: growth_rates(spec, cfg, periods))
            payload["growth_rates"] = [float(r) for r in rates]

        if context.config.command.snapshots and "csv" in context.config.output.formats:
            context.files.append(self._write_snapshots(context, result))
        return payload

    def _write_snapshots(self, context: RunContext, result) -> Path:
        points = context.spec.domain.points
        axes = ["x", "y"][: points.shape[1]]
        rows = []
        for t, snapshot in zip(result.times, result.eigenfunction):
            for i, value in enumerate(snapshot):
                row = {"t": float(t), "point": i, "value": float(value)}
                row.update({name: float(points[i, a]) for a, name in enumerate(axes)})
                rows.append(row)
        return write_csv(context.output_dir / "eigenfunction.csv", rows, ["t", "point", *axes, "value"])

    def _write_sweep(self, context: RunContext, sweep: SweepResult, stem: str) -> None:
        for point in sweep.points:
            context.grids.append({"param": point.value, "cells": list(point.cells), "n": point.n})
            context.timings[f"{stem}[{point.value!r}]"] = point.elapsed
            if point.error:
                context.warnings.append(f"{stem} point {point.value!r} failed: {point.error['message']}")
            elif not point.is_principal:
                context.warnings.append(f"{stem} point {point.value!r}: is_principal=false")
        if "csv" in context.config.output.formats:
            columns = SWEEP_COLUMNS + [f"gap_{ref.name}" for ref in sweep.references]
            context.files.append(write_csv(context.output_dir / f"{stem}.csv", sweep.rows(), columns))

    def _sweep_d(self, context: RunContext) -> Dict[str, Any]:
        values = self._require(context.config.command.D_values, "/command/D_values")
        sweep = context.timed(
            "sweep_dispersal_rate",
            lambda: sweep_dispersal_rate(context.spec, values, context.config.solver, context.jobs),
        )
        self._write_sweep(context, sweep, "sweep_d")
        return sweep.to_dict()

    def _sweep_sigma(self, context: RunContext) -> Dict[str, Any]:
        command = context.config.command
        values = self._require(command.sigma_values, "/command/sigma_values")
        k_values = command.k_values or [context.spec.k]
        sweeps = []
        for k in k_values:
            sweep = context.timed(
                "sweep_dispersal_range",
                lambda: sweep_dispersal_range(
                    context.spec,
                    values,
                    k,
                    cfg=context.config.solver,
                    jobs=context.jobs,
                    refine=command.refine,
                    references=command.references,
                    max_points=self.settings.max_points,
                ),
            )
            self._write_sweep(context, sweep, f"sweep_sigma_k{k:g}")
            sweeps.append(sweep.to_dict())
        return {"sweeps": sweeps}

    def _poincare(self, context: RunContext) -> Dict[str, Any]:
        spec = context.spec
        C, checker = context.timed(
            "poincare_constant", lambda: poincare_constant(spec.domain, spec.kernel, spec.sigma)
        )
        rng = np.random.default_rng(context.config.solver.seed)
        samples = [checker.project_mean_zero(rng.standard_normal(spec.size)) for _ in range(100)]
        ratios = [checker.form(f) / checker.norm2(f) for f in samples]
        residuals = [checker.identity_residual(f) / checker.norm2(f) for f in samples]
        return {
            "C": C,
            "n": spec.size,
            "sigma": float(spec.sigma),
            "min_sampled_ratio": float(min(ratios)),
            "max_identity_residual": float(max(residuals)),
        }

    def _test_function(self, context: RunContext, result=None) -> SpaceTimeFunction:
        spec = context.spec
        choice = context.config.command.test_function
        if choice == "constant":
            return SpaceTimeFunction.constant(spec.size)
        if choice == "ode":
            return ode_test_function(spec)
        result = result or principal_spectrum_point(spec, context.config.solver)
        return eigen_test_function(spec, result, context.config.solver)

    def _certify(self, context: RunContext) -> Dict[str, Any]:
        command = context.config.command
        lam = self._require(command.lambda_, "/command/lambda")
        phi = self._test_function(context)
        verdict = context.timed(
            "certify_test_pair",
            lambda: certify_test_pair(context.spec, lam, phi, command.direction, command.mt_samples),
        )
        lower, upper = context.timed(
            "collatz_wielandt_bounds",
            lambda: collatz_wielandt_bounds(context.spec, phi, command.mt_samples),
        )
        return {
            "test_function": command.test_function,
            "verdict": verdict.to_dict(),
            "collatz_wielandt": {"lower": lower, "upper": upper},
        }

    def _mp_check(self, context: RunContext) -> Dict[str, Any]:
        command = context.config.command
        cfg = context.config.solver
        if command.shifts:
            rows = context.timed("mp_audit", lambda: mp_audit(context.spec, command.shifts, cfg, context.jobs))
            if "csv" in context.config.output.formats:
                columns = ["shift", "lambda1", "strong_mp", "strict_mp", "inconclusive", "counterexample", "delta", "min_Lu"]
                context.files.append(
                    write_csv(context.output_dir / "mp_audit.csv", [r.to_dict() for r in rows], columns)
                )
            return {"audit": [r.to_dict() for r in rows]}

        verdict = context.timed("mp_verdict", lambda: mp_verdict(context.spec, cfg, command.mt_samples))
        if verdict.inconclusive:
            context.warnings.append(f"lambda1={verdict.lambda1:.3e} is inconclusive at this resolution")
        payload = verdict.to_dict()
        if command.test_function != "eigenfunction":
            phi = self._test_function(context)
            check = check_supersolution(
                context.spec, phi, command.strict, command.mt_samples, lambda1=verdict.lambda1
            )
            payload["supersolution_check"] = check.to_dict()
        return payload

    def _oracle_compare(self, context: RunContext) -> Dict[str, Any]:
        cfg = context.config.solver
        power = context.timed("principal_spectrum_point", lambda: principal_spectrum_point(context.spec, cfg))
        dense = context.timed("dense_oracle", lambda: dense_oracle(context.spec, cfg))
        return {
            "power": power.lambda1,
            "dense": dense,
            "difference": abs(power.lambda1 - dense),
        }
