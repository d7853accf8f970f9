"""Exception hierarchy for parawolff."""

from pathlib import Path
from typing import Optional, Union


class ParawolffError(Exception):
    """Base class for parawolff errors."""

    pass


class ConfigError(ParawolffError):
    """Invalid run configuration or command-line usage."""

    pass


class FormatError(ParawolffError):
    """Unparseable measure or region file."""

    def __init__(
        self,
        path: Union[str, Path],
        expectation: str,
        line: Optional[int] = None,
    ):
        self.path = str(path)
        self.line = line
        self.expectation = expectation
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: expected {expectation}")


class LatticeRangeError(ParawolffError):
    """Generation outside the lattice truncation or index overflow."""

    pass


class SolverError(ParawolffError):
    """A capacity solver could not produce an estimate."""

    def __init__(self, message: str, level: Optional[int] = None):
        self.level = level
        if level is not None:
            message = f"level {level}: {message}"
        super().__init__(message)


class DegenerateCloudError(SolverError):
    """The linear capacity program is unbounded for this cloud."""

    pass


class QuadratureError(ParawolffError):
    """A quadrature grid is too short or too coarse for the requested accuracy."""

    pass


class PreconditionError(ParawolffError):
    """An operation was called outside its hypotheses."""

    pass
