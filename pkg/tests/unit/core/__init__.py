"""Unit tests for the numerical core: geometry, kernels, lattice, solvers and output."""
