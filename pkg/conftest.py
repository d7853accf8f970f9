"""Pytest configuration for parawolff tests.

Selects the non-interactive matplotlib backend before any test imports the
reporting module.
"""

import matplotlib

matplotlib.use("Agg")
