"""Pytest configuration and fixtures for nonlocal-spectra tests."""
import json
from pathlib import Path

import pytest

from nonlocal_spectra.config.settings import reset_settings
from nonlocal_spectra.core.coefficient import build_coefficient, constant_coefficient
from nonlocal_spectra.core.geometry import build_domain
from nonlocal_spectra.core.kernel import make_kernel
from nonlocal_spectra.core.operator import OperatorSpec
from nonlocal_spectra.core.spectral import EvolutionConfig

# cos(pi x) + sin(2 pi t) on (0, 1), the running example of the sweeps
SEPARABLE_B = "cos(pi*x)"
SEPARABLE_C = "sin(2*pi*t)"


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Every test starts from default settings and no jobs override."""
    monkeypatch.delenv("NONLOCAL_SPECTRA_JOBS", raising=False)
    monkeypatch.delenv("NONLOCAL_SPECTRA_LOG_LEVEL", raising=False)
    monkeypatch.delenv("NONLOCAL_SPECTRA_OUTPUT_DIR", raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def unit_interval():
    return build_domain(1, [(0.0, 1.0)], [40])


@pytest.fixture
def epanechnikov():
    return make_kernel("epanechnikov1d")


@pytest.fixture
def cfg():
    return EvolutionConfig()


@pytest.fixture
def separable_coeff():
    return build_coefficient("separable", b=SEPARABLE_B, c=SEPARABLE_C)


@pytest.fixture
def separable_spec(unit_interval, epanechnikov, separable_coeff):
    return OperatorSpec(
        domain=unit_interval, kernel=epanechnikov, coeff=separable_coeff, D=1.0, sigma=1.0
    )


@pytest.fixture
def constant_spec(unit_interval, epanechnikov):
    """a = 2: lambda1 = -2 exactly with Neumann dispersal."""
    return OperatorSpec(
        domain=unit_interval, kernel=epanechnikov, coeff=constant_coefficient(2.0), D=1.0, sigma=1.0
    )


@pytest.fixture
def base_problem():
    """Problem block of a run file for the separable example."""
    return {
        "domain": {"dimension": 1, "bounds": [[0.0, 1.0]], "cells": [20]},
        "kernel": {"family": "epanechnikov1d"},
        "coefficient": {"form": "separable", "T": 1.0, "b": SEPARABLE_B, "c": SEPARABLE_C},
        "D": 1.0,
        "sigma": 1.0,
        "k": 0.0,
        "boundary": "neumann",
    }


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration dict to a JSON file and return its path."""

    def _write(data, name="run.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
