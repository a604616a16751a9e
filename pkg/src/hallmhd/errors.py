"""Exception taxonomy shared by the library and the CLI exit codes."""


class HallMHDError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(HallMHDError, ValueError):
    """Invalid grid, norm specification, solver settings or job config."""

    exit_code = 2


class IntegrityError(HallMHDError):
    """Data violates a structural invariant (symmetry, grid match, J = curl B)."""

    exit_code = 3


class NonConvergenceError(HallMHDError):
    """A fixed-point iteration left its admissible region."""

    exit_code = 4


class StorageError(HallMHDError, OSError):
    """Reading or writing an artifact failed."""

    exit_code = 5


class DomainError(HallMHDError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2
