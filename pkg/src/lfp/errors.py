"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data-shaped failures (bad files, bad
genotypes, impossible sampling requests) exit with 3, numeric failures
(degenerate statistics, failed fits) with 4.
"""


class LfpError(Exception):
    """Base class for all package errors."""


class ValidationError(LfpError):
    """A cell or genotype violates a structural invariant."""


class DecodeError(LfpError):
    """A bit pattern is not the encoding of any valid cell."""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        self.detail = detail
        message = rule if not detail else f"{rule}: {detail}"
        super().__init__(message)


class TableError(LfpError):
    """A benchmark file failed to parse or violates table invariants."""


class QueryError(LfpError):
    """A fitness query referenced an unknown genotype or measurement triple."""


class CapacityError(LfpError):
    """An exhaustive operation was requested on a space beyond the size cap."""


class SamplingError(LfpError):
    """A sampler could not produce the requested sample set."""


class StatsError(LfpError):
    """A statistical routine received degenerate input."""


class ZeroVarianceError(StatsError):
    """A series or sample had zero variance where variance is required."""


class FitError(StatsError):
    """Distribution fitting failed; carries the best iterate when available."""

    def __init__(self, message: str, best_params=None):
        self.best_params = best_params
        super().__init__(message)


class AnalysisError(LfpError):
    """A landscape analysis could not produce a defined result."""


# Buckets used by the CLI for exit-code mapping.
DATA_ERRORS = (ValidationError, DecodeError, TableError, QueryError,
               CapacityError, SamplingError)
NUMERIC_ERRORS = (StatsError, AnalysisError)
