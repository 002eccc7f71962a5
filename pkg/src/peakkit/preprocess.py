"""Band-pass filtering, z-score normalization and window segmentation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import AlreadyPreprocessed, InvariantViolation, TooShort
from .segments import Modality, SignalSegment

FLAT_STD = 1e-12


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass design: analog Butterworth prototype of even ``order``,
    band-transformed and discretized by a pre-warped bilinear transform,
    realized as cascaded second-order sections."""

    order: int = 4
    low_hz: float = 0.6
    high_hz: float = 15.0
    zero_phase: bool = True

    def __post_init__(self):
        if self.order < 2 or self.order % 2 != 0:
            raise InvariantViolation("filter order must be a positive even integer")
        if not (0.0 < self.low_hz < self.high_hz):
            raise InvariantViolation("need 0 < low_hz < high_hz")

    def validate_for(self, fs: float) -> None:
        if not self.high_hz < fs / 2:
            raise InvariantViolation(
                f"high_hz {self.high_hz} must sit below the Nyquist rate {fs / 2}"
            )


def butterworth_bandpass(x: np.ndarray, fs: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Apply the band-pass filter described by ``spec``.

    With zero_phase the filter runs forward then backward over the signal
    extended by odd reflection (reflect-and-negate about each endpoint) of
    length 3 * (order + 1), which cancels phase distortion so symmetric
    pulses keep their apex sample.
    """
    spec.validate_for(fs)
    x = np.asarray(x, dtype=np.float64)
    sos = signal.butter(spec.order, [spec.low_hz, spec.high_hz], btype="bandpass",
                        fs=fs, output="sos")
    if not spec.zero_phase:
        return signal.sosfilt(sos, x)
    padlen = 3 * (spec.order + 1)
    if x.size <= padlen:
        raise TooShort(f"zero-phase filtering needs more than {padlen} samples, got {x.size}")
    return signal.sosfiltfilt(sos, x, padtype="odd", padlen=padlen)


def zscore(x: np.ndarray) -> np.ndarray:
    """Center and scale to unit population std.

    Flat inputs (population std below 1e-12) come back as all zeros instead
    of dividing by ~0.
    """
    x = np.asarray(x, dtype=np.float64)
    std = float(np.std(x))
    if std < FLAT_STD:
        return np.zeros_like(x)
    return (x - np.mean(x)) / std


def segment_windows(raw: Sequence[float] | np.ndarray, fs: float, window_len: int = 1000, *,
                    segment_id_prefix: str = "win", subject_id: str = "unknown",
                    modality: Modality = Modality.SYNTH,
                    gt_peaks: Sequence[int] = ()) -> list[SignalSegment]:
    """Cut a raw recording into non-overlapping windows of ``window_len``
    samples, dropping the remainder. Optional ``gt_peaks`` (indices into the
    raw recording) are distributed to their windows and re-based.

    Raises TooShort when not even one window fits.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if window_len < 2:
        raise InvariantViolation("window_len must be >= 2")
    n_windows = raw.size // window_len
    if n_windows == 0:
        raise TooShort(f"need at least {window_len} samples, got {raw.size}")
    gt = np.asarray(sorted(int(i) for i in gt_peaks), dtype=np.int64)
    out = []
    for w in range(n_windows):
        lo, hi = w * window_len, (w + 1) * window_len
        local = gt[(gt >= lo) & (gt < hi)] - lo
        out.append(SignalSegment(
            segment_id=f"{segment_id_prefix}{w:04d}",
            subject_id=subject_id,
            modality=modality,
            fs=fs,
            samples=raw[lo:hi],
            gt_peaks=tuple(int(i) for i in local),
            preprocessed=False,
        ))
    return out


def preprocess_segment(seg: SignalSegment, spec: FilterSpec = FilterSpec()) -> SignalSegment:
    """Band-pass then z-score a raw segment. Annotations pass through
    unchanged; the result is marked preprocessed."""
    if seg.preprocessed:
        raise AlreadyPreprocessed(f"segment {seg.segment_id!r} is already preprocessed")
    filtered = butterworth_bandpass(seg.samples, seg.fs, spec)
    return seg.with_samples(zscore(filtered), preprocessed=True)
