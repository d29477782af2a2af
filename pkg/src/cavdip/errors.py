"""Exception hierarchy shared by all cavdip modules.

Each error class carries the process exit code used by the command line
interface (config=2, threshold=3, convergence=4, degenerate=5).
"""


class CavdipError(Exception):
    """Base class for all cavdip errors."""

    exit_code = 1


class ConfigError(CavdipError):
    """Invalid configuration input (bad JSON, schema violation, bad units)."""

    exit_code = 2


class DomainError(ConfigError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 2


class ThresholdError(CavdipError):
    """Wavenumber inside the guard band of a cavity mode threshold.

    The Green tensor real parts diverge logarithmically at k = n*pi/d; the
    evaluation aborts instead of returning a near-singular value.
    """

    exit_code = 3


class ConvergenceError(CavdipError):
    """Quadrature or series failed to reach the requested tolerance."""

    exit_code = 4


class DegenerateError(CavdipError):
    """A formula denominator (transition frequency or detuning) vanishes."""

    exit_code = 5


class DerivativeMismatchError(CavdipError):
    """Analytic and finite-difference derivative paths disagree."""

    exit_code = 4
