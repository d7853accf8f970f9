"""Module tests for parawolff.

This package contains end-to-end experiments that run the thinness,
capacity and CLI layers together on small configurations.
"""
