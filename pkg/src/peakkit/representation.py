"""Candidate-peak representation: local extrema rendered as timestamp text.

A preprocessed segment is reduced to its candidate peaks (strict local
extrema; plateaus contribute their leftmost sample) and each candidate is
stamped with a synthetic calendar time anchored at 2020-01-01 00:00:00.
The elapsed seconds for index i are floor(i * seconds_per_sample); at the
default scale of one second per sample the timestamp is simply the index
read as a clock.

Wire format (bit-exact, LF line endings)::

    <TS_START>
    (2020-01-01 00:01:37, 2.915030)
    ...
    <TS_END>

One ``(TIMESTAMP, AMPLITUDE)`` line per candidate in chronological order,
amplitudes with exactly six fractional digits. Candidate polarity and the
segment metadata are not part of the wire format; ``parse_serialized``
takes metadata as keyword context and infers polarity from the amplitude
sign, so exact round-trips hold on sign-consistent representations whose
entries land on distinct whole-second timestamps (always true at the
default scale).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from fractions import Fraction
from math import ceil, floor

import numpy as np

from .errors import (
    InvariantViolation,
    MalformedPair,
    MissingSentinel,
    NonMonotonicTimestamps,
    NotPreprocessed,
    OutOfRange,
    ParseError,
    SegmentMismatch,
    WrongAnchor,
)
from .segments import SignalSegment

TS_START = "<TS_START>"
TS_END = "<TS_END>"
ANCHOR = datetime(2020, 1, 1, 0, 0, 0)
MAX_ELAPSED_S = 365 * 24 * 3600

TIMESTAMP_PATTERN = r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}"
_PAIR_RE = re.compile(rf"^\(({TIMESTAMP_PATTERN}), (-?\d+\.\d{{6}})\)$")


class Polarity(str, Enum):
    MAX = "MAX"
    MIN = "MIN"


class PolarityMode(str, Enum):
    BOTH = "BOTH"
    MAX_ONLY = "MAX_ONLY"


@dataclass(frozen=True)
class CandidatePeak:
    index: int
    amplitude: float
    polarity: Polarity
    timestamp: str


@dataclass(frozen=True)
class PeakRepresentation:
    segment_ref: str
    fs: float
    ts_seconds_per_sample: Fraction
    min_distance: int
    entries: tuple[CandidatePeak, ...]


def as_scale(seconds_per_sample) -> Fraction:
    """Normalize a timestamp scale to an exact positive rational.

    Floats go through their shortest decimal representation, so 0.01 means
    exactly 1/100 rather than its binary approximation.
    """
    if isinstance(seconds_per_sample, float):
        scale = Fraction(repr(seconds_per_sample))
    else:
        scale = Fraction(seconds_per_sample)
    if scale <= 0:
        raise InvariantViolation("seconds_per_sample must be positive")
    return scale


def index_to_timestamp(index: int, seconds_per_sample=1) -> str:
    """Render sample ``index`` as ``YYYY-MM-DD HH:MM:SS`` at the anchor epoch.

    Elapsed whole seconds are floor(index * seconds_per_sample). Raises
    OutOfRange for negative indices or times one year or more past the
    anchor.
    """
    scale = as_scale(seconds_per_sample)
    if index < 0:
        raise OutOfRange(f"index {index} is negative")
    elapsed = floor(index * scale)
    if elapsed >= MAX_ELAPSED_S:
        raise OutOfRange(f"index {index} maps {elapsed} s past the anchor (>= 1 year)")
    stamp = ANCHOR + timedelta(seconds=elapsed)
    return stamp.strftime("%Y-%m-%d %H:%M:%S")


def timestamp_to_index(timestamp: str, seconds_per_sample=1) -> int:
    """Invert index_to_timestamp.

    Returns the exact index whenever index * scale was integral (the
    round-trip law); otherwise the smallest index whose floored timestamp
    equals the given second. Raises ParseError for malformed text and
    WrongAnchor for timestamps outside the anchor year.
    """
    scale = as_scale(seconds_per_sample)
    try:
        stamp = datetime.strptime(timestamp, "%Y-%m-%d %H:%M:%S")
    except ValueError as exc:
        raise ParseError(f"bad timestamp {timestamp!r}: {exc}") from None
    elapsed = (stamp - ANCHOR).total_seconds()
    if elapsed < 0 or elapsed >= MAX_ELAPSED_S:
        raise WrongAnchor(f"timestamp {timestamp!r} is not rooted at {ANCHOR:%Y-%m-%d}")
    return int(ceil(Fraction(int(elapsed)) / scale))


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def local_extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima of ``x``.

    Plateaus count once at their leftmost sample; endpoints never qualify.
    """
    x = np.asarray(x, dtype=np.float64)
    d = np.diff(x)
    nz = np.flatnonzero(d)
    if nz.size < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    s = np.sign(d[nz])
    turn = s[:-1] != s[1:]
    starts = nz[:-1][turn] + 1           # leftmost sample of the turning level
    kinds = s[:-1][turn]                 # +1 = rise into the level -> maximum
    return starts[kinds > 0].astype(np.int64), starts[kinds < 0].astype(np.int64)


def _prune_by_distance(indices: np.ndarray, amplitudes: np.ndarray, min_distance: int) -> np.ndarray:
    """Boolean keep-mask enforcing pairwise spacing >= min_distance.

    Extrema are retained largest-|amplitude| first (leftmost wins ties);
    each retained extremum removes any not-yet-retained neighbor closer
    than min_distance.
    """
    keep = np.ones(indices.size, dtype=bool)
    if min_distance <= 0 or indices.size <= 1:
        return keep
    order = np.lexsort((indices, -np.abs(amplitudes)))
    for j in order:
        if not keep[j]:
            continue
        lo = np.searchsorted(indices, indices[j] - min_distance + 1, side="left")
        hi = np.searchsorted(indices, indices[j] + min_distance - 1, side="right")
        keep[lo:hi] = False
        keep[j] = True
    return keep


def extract_extrema(seg: SignalSegment, min_distance: int = 0,
                    polarity_mode: PolarityMode = PolarityMode.BOTH,
                    seconds_per_sample=1) -> PeakRepresentation:
    """Build the candidate-peak representation of a preprocessed segment.

    The search is inclusive-first. At min_distance 0 nothing is filtered at
    all: every sample is a candidate (polarity by amplitude sign), so the
    representation is a lossless resampling of the segment. At min_distance
    >= 1 the candidates are the strict local extrema, pruned within each
    polarity class independently: when two same-polarity extrema sit closer
    than min_distance samples apart, the smaller-|amplitude| one is removed
    (iteratively, largest first).
    """
    if not seg.preprocessed:
        raise NotPreprocessed(f"segment {seg.segment_id!r} must be preprocessed first")
    if min_distance < 0:
        raise InvariantViolation("min_distance must be >= 0")
    polarity_mode = PolarityMode(polarity_mode)
    scale = as_scale(seconds_per_sample)

    if min_distance == 0:
        every = np.arange(seg.samples.size, dtype=np.int64)
        maxima = every[seg.samples >= 0.0]
        minima = every[seg.samples < 0.0]
    else:
        maxima, minima = local_extrema(seg.samples)
    if polarity_mode is PolarityMode.MAX_ONLY:
        minima = minima[:0]

    entries: list[CandidatePeak] = []
    for idx_arr, polarity in ((maxima, Polarity.MAX), (minima, Polarity.MIN)):
        if idx_arr.size == 0:
            continue
        amps = seg.samples[idx_arr]
        keep = _prune_by_distance(idx_arr, amps, min_distance)
        for i, a in zip(idx_arr[keep], amps[keep]):
            entries.append(CandidatePeak(
                index=int(i),
                amplitude=float(a),
                polarity=polarity,
                timestamp=index_to_timestamp(int(i), scale),
            ))
    entries.sort(key=lambda e: e.index)
    return PeakRepresentation(
        segment_ref=seg.segment_id,
        fs=seg.fs,
        ts_seconds_per_sample=scale,
        min_distance=int(min_distance),
        entries=tuple(entries),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize_representation(rep: PeakRepresentation) -> str:
    """Render ``rep`` in the wire format described in the module docstring."""
    lines = [TS_START]
    prev = None
    for lineno, e in enumerate(rep.entries, start=2):
        if prev is not None and e.timestamp <= prev:
            raise NonMonotonicTimestamps(lineno)
        prev = e.timestamp
        lines.append(f"({e.timestamp}, {e.amplitude:.6f})")
    lines.append(TS_END)
    return "\n".join(lines)


def parse_serialized(text: str, *, segment_ref: str = "", fs: float = 1.0,
                     seconds_per_sample=1, min_distance: int = 0) -> PeakRepresentation:
    """Parse the wire format back into a PeakRepresentation.

    Tolerates surrounding whitespace. Raises MissingSentinel, MalformedPair
    (with its 1-based line number) or NonMonotonicTimestamps.
    """
    scale = as_scale(seconds_per_sample)
    lines = [ln.strip() for ln in text.strip().split("\n")]
    if not lines or lines[0] != TS_START:
        raise MissingSentinel(f"first line must be {TS_START}")
    if lines[-1] != TS_END or len(lines) < 2:
        raise MissingSentinel(f"last line must be {TS_END}")
    entries: list[CandidatePeak] = []
    prev = None
    for lineno, line in enumerate(lines[1:-1], start=2):
        m = _PAIR_RE.match(line)
        if m is None:
            raise MalformedPair(lineno, f"expected '(TIMESTAMP, AMPLITUDE)', got {line!r}")
        ts, amp_text = m.group(1), m.group(2)
        if prev is not None and ts <= prev:
            raise NonMonotonicTimestamps(lineno)
        prev = ts
        index = timestamp_to_index(ts, scale)
        amplitude = float(amp_text)
        entries.append(CandidatePeak(
            index=index,
            amplitude=amplitude,
            polarity=Polarity.MAX if amplitude >= 0 else Polarity.MIN,
            timestamp=ts,
        ))
    return PeakRepresentation(
        segment_ref=segment_ref,
        fs=float(fs),
        ts_seconds_per_sample=scale,
        min_distance=int(min_distance),
        entries=tuple(entries),
    )


def retention_ratio(rep: PeakRepresentation, seg: SignalSegment) -> float:
    """Fraction of raw samples retained as candidate peaks."""
    if rep.segment_ref != seg.segment_id:
        raise SegmentMismatch(f"representation of {rep.segment_ref!r} vs segment {seg.segment_id!r}")
    return len(rep.entries) / seg.samples.size
