"""Exception hierarchy shared by every fsrm module.

Each error carries the process exit code the CLI should return for it.
"""

from __future__ import annotations


class FsrmError(Exception):
    exit_code = 1


class ConfigError(FsrmError, ValueError):
    """Invalid parameters, flags or configuration file."""

    exit_code = 2


class DataError(FsrmError, ValueError):
    """Input data that cannot be parsed or is too short for the requested operation."""

    exit_code = 3


class DegenerateWindowError(DataError):
    """A second-difference sum vanished, e.g. constant or affine data in a window."""


class NumericalError(FsrmError, ArithmeticError):
    """Quadrature failure or a formula evaluated outside its domain."""

    exit_code = 4


class UndefinedRateError(NumericalError):
    """Hit rate requested with no active prediction."""


class OutputLockedError(FsrmError):
    """Another run holds the lock on the output directory."""


class PipelineError(FsrmError):
    """An error raised inside run_pipeline, tagged with the failing stage."""

    def __init__(self, stage: str, cause: FsrmError):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
