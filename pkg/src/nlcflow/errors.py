"""Exception hierarchy.

Everything raised by a solver derives from :class:`SolverError`; the CLI maps
those to exit code 1 and :class:`ConfigError` to exit code 2.
"""


class NlcflowError(Exception):
    pass


class SolverError(NlcflowError):
    pass


class CflViolation(SolverError):
    pass


class NonSolenoidalVelocity(SolverError):
    pass


class NonPositiveDensity(SolverError):
    pass


class LinearSolveDiverged(SolverError):
    pass


class SaddleSolveDiverged(SolverError):
    pass


class PicardDiverged(SolverError):
    pass


class GridMismatch(NlcflowError, ValueError):
    pass


class ConfigError(NlcflowError, ValueError):
    """Bad configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InvalidPreset(ConfigError):
    pass


class FormatError(NlcflowError, ValueError):
    pass


class IoError(NlcflowError, OSError):
    """A file could not be read or written."""
