"""Exception hierarchy for gckit.

Loaders and numeric kernels raise distinct subclasses so callers (and the
CLI exit-code mapping) can tell configuration mistakes apart from bad data.
"""


class GckitError(Exception):
    """Base class for all gckit errors."""


class ParamError(GckitError, ValueError):
    """A parameter violates its contract (alpha range, K vs n_docs, ...)."""


class DataError(GckitError):
    """Base class for input-data problems."""


class MatrixFormatError(DataError):
    """Malformed LPM1 header or unparseable CSV."""


class DimensionMismatchError(DataError):
    """Declared dimensions disagree with the payload or a paired input."""


class NonFiniteValueError(DataError):
    """A log-probability entry is NaN or infinite."""


class PositiveLogProbError(DataError):
    """A log-probability entry is > 0 (probability mass above 1)."""


class WeightOverflowError(GckitError, FloatingPointError):
    """An importance weight overflowed to +inf."""


class WeightUnderflowError(GckitError, FloatingPointError):
    """An importance weight underflowed to 0."""


class AbsoluteContinuityError(GckitError, ValueError):
    """KL(p || q) requested where q = 0 on the support of p."""


class DegenerateWeightsError(GckitError, ValueError):
    """All resampling weights underflowed to zero."""
