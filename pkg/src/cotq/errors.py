"""Exception hierarchy for cotq.

The CLI maps these onto exit codes: configuration/usage problems exit
with 1, data problems with 2, solver problems with 3.
"""


class CotqError(Exception):
    """Base class for all cotq errors."""


class InvalidSpecError(CotqError, ValueError):
    """A grid, weight, or run configuration violates its constraints."""


class InvalidInputError(CotqError, ValueError):
    """An operation received values outside its documented domain."""


class OutOfDomainError(InvalidInputError):
    """Evaluation point lies outside the open unit ball."""


class DataError(CotqError):
    """Dataset ingestion failed (missing file, column, or bad cell)."""


class SolverError(CotqError):
    """Base class for transport solver failures."""


class InfeasibleProblemError(SolverError):
    """Marginal masses do not balance within tolerance."""


class SolverStallError(SolverError):
    """The pivot cap was exceeded before reaching optimality."""


class ResourceLimitError(SolverError):
    """A configured size cap (grid points, dense cost entries) was exceeded."""


class UnsupportedOracleError(CotqError):
    """No analytic population contour is available for the requested model."""


class InternalConsistencyError(CotqError):
    """An invariant that the library itself must maintain was violated."""
