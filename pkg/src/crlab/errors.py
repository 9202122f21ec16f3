"""Exception types shared across the package."""


class CrlabError(Exception):
    """Base class for package-specific failures."""


class ConfigError(CrlabError):
    """Bad scenario configuration (schema or value violation)."""


class DegenerateChainError(CrlabError):
    """Markov chain without a unique stationary distribution."""


class CapacityLimitError(CrlabError):
    """Instance too large for an exact/enumerative routine."""


class QuadratureError(CrlabError):
    """Numerical integration did not reach the requested accuracy."""


class SingularMatrixError(CrlabError):
    """Gain matrix (or its transpose) is not invertible."""


class RankDeficiencyError(CrlabError):
    """Gain columns are linearly dependent; names the offending column."""

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"gain column {column} is linearly dependent on the others")


class NonConvergenceError(CrlabError):
    """Iterative solver hit its iteration cap; carries the partial report."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
