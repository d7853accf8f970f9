"""Unit tests for pydantic models."""
