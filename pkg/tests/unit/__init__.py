"""Unit tests for parawolff.

This package contains unit-level tests for models, core modules and
CLI argument handling.
"""
