"""Exception types shared across the toolkit.

Everything raised on purpose derives from PeakkitError so callers (and the
CLI) can separate expected data/config failures from genuine bugs.
"""

from __future__ import annotations


class PeakkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PeakkitError):
    """Bad user-supplied configuration (CLI exit code 2)."""


class DataError(PeakkitError):
    """Bad or inconsistent input data (CLI exit code 3)."""


class FormatError(DataError):
    """A file failed to parse. Carries a human-readable location."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class InvariantViolation(DataError):
    """A value violates a documented structural invariant."""


class TooShort(DataError):
    """Input signal shorter than the operation requires."""


class AlreadyPreprocessed(DataError):
    """Segment was already filtered and normalized."""


class NotPreprocessed(DataError):
    """Operation requires a preprocessed segment."""


class OutOfRange(DataError):
    """Index maps outside the supported timestamp range."""


class ParseError(DataError):
    """Text failed to parse."""


class WrongAnchor(ParseError):
    """Timestamp is not rooted at the canonical anchor date."""


class MissingSentinel(ParseError):
    """Serialized representation lacks its start or end marker."""


class MalformedPair(ParseError):
    """A serialized (timestamp, amplitude) line is malformed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonMonotonicTimestamps(ParseError):
    """Serialized timestamps are not strictly increasing."""

    def __init__(self, line: int, message: str = "timestamps not strictly increasing"):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SegmentMismatch(DataError):
    """Representation and segment do not refer to the same data."""


class TooFewKnots(DataError):
    """Spline reconstruction needs at least two knots."""


class LengthMismatch(DataError):
    """Arrays that must be the same length are not."""


class FlatInput(DataError):
    """Correlation is undefined on a flat (zero-variance) signal."""


class UnsupportedRate(DataError):
    """Sampling rate outside the detector's supported range."""


class NoPeriodFound(DataError):
    """Autocorrelation shows no usable periodicity in the search band."""


class NotSorted(DataError):
    """Peak index arrays must be strictly increasing."""


class InsufficientPeaks(DataError):
    """Too few peaks/intervals for the requested statistic."""


class GroundTruthDegenerate(DataError):
    """Ground truth cannot yield the reference statistic."""


class TooFewSubjects(DataError):
    """Not enough distinct subjects for the requested fold count."""


class DegenerateSample(DataError):
    """Samples unsuitable for the statistical test."""


class AlignmentError(DataError):
    """Parallel sequences are misaligned."""


class UnknownRecord(DataError):
    """Record id not present in the audit bundle."""


class InvalidLabel(DataError):
    """Label outside the review taxonomy."""
