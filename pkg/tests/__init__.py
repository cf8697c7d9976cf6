"""Test package for redoc."""

# This file makes the tests directory a Python package
