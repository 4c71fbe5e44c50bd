"""Exception hierarchy.

Every error that can reach the command line carries the exit code the CLI
reports for it.
"""


class BlabError(Exception):
    exit_code = 1


class ConfigError(BlabError, ValueError):
    """Invalid parameters, files or combinations of options."""

    exit_code = 2


class InvalidPotentialError(ConfigError):
    pass


class GeometryError(ConfigError):
    """Potential support does not fit where it has to."""


class RegimeError(ConfigError):
    """Parameters are outside the range where the trial state makes sense."""


class ResourceError(BlabError, MemoryError):
    exit_code = 3


class SolverError(BlabError, RuntimeError):
    exit_code = 4


class DomainError(BlabError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2


class TruncationError(ResourceError):
    """Fock-space occupation or basis size exceeded the configured cap."""
