"""Exception types raised across the pipeline."""


class PulseBPError(Exception):
    """Base class for all library errors."""


class ParseError(PulseBPError):
    """Input file could not be parsed."""


class InvalidInputError(PulseBPError):
    """Input violates a documented precondition (range, monotonicity, length)."""


class NoBeatsError(PulseBPError):
    """Fewer than two onsets were found; no beat can be formed."""


class TooFewSamplesError(PulseBPError):
    """A series is too short for the requested operation."""


class DegenerateBeatError(PulseBPError):
    """Beat geometry does not admit the requested landmark (flat, inverted, ...)."""


class EmptyWindowError(PulseBPError):
    """A landmark search window contains no samples."""


class ParallelLinesError(PulseBPError):
    """Tangent and extrapolation line have (numerically) equal slopes."""


class ZeroDenominatorError(PulseBPError):
    """A ratio feature has a vanishing denominator; the beat is excluded."""


class ZeroAreaError(PulseBPError):
    """Systole polygon area vanished (collinear vertices)."""


class SpectrumError(PulseBPError):
    """Spectral preconditions violated (too short, zero power, missing coverage)."""


class DatasetError(PulseBPError):
    """Feature-table operation failed (constant covariate, too few rows, ...)."""


class RankDeficientError(PulseBPError):
    """Design matrix is rank deficient; OLS coefficients are not identifiable."""


class TooFewRowsError(PulseBPError):
    """Not enough rows for the requested fit or partition."""


class NoValidBeatsError(PulseBPError):
    """Every beat of a sample was excluded; nothing to aggregate."""
