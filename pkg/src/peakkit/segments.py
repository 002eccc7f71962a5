"""Signal segments: container types, file I/O, and synthetic beat trains.

A segment is a short single-channel recording with optional ground-truth peak
annotations. Two on-disk formats are supported:

* RECORDS: one JSON object per line with keys
  ``segment_id, subject_id, modality, fs, samples, gt_peaks, preprocessed``.
  This is the canonical format; writing what was loaded reproduces the file
  byte for byte.
* CSV: header ``index,value``, one segment per file. Ground truth lives in a
  sidecar ``<name>.peaks.csv`` with header ``index``.

Synthetic segments are sums of per-beat Gaussian bumps with a dominant
fiducial (R, systolic or J apex depending on modality). With zero noise every
annotated peak index is a strict local maximum of the rendered samples.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError, InvariantViolation

RECORD_KEYS = ("segment_id", "subject_id", "modality", "fs", "samples", "gt_peaks", "preprocessed")


class Modality(str, Enum):
    ECG = "ECG"
    PPG = "PPG"
    BCG = "BCG"
    BSG = "BSG"
    SYNTH = "SYNTH"


class RecordFormat(str, Enum):
    RECORDS = "RECORDS"
    CSV = "CSV"


@dataclass(frozen=True)
class SignalSegment:
    """One contiguous recording with optional peak annotations.

    gt_peaks are sample indices into ``samples``, strictly increasing and in
    range. ``preprocessed`` marks a segment that has already been band-passed
    and z-scored.
    """

    segment_id: str
    subject_id: str
    modality: Modality
    fs: float
    samples: np.ndarray
    gt_peaks: tuple[int, ...] = ()
    preprocessed: bool = False

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 2:
            raise InvariantViolation(
                f"segment {self.segment_id!r}: samples must be a 1-d array with >= 2 values"
            )
        if not np.all(np.isfinite(samples)):
            raise InvariantViolation(f"segment {self.segment_id!r}: samples must be finite")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if not (isinstance(self.fs, (int, float)) and math.isfinite(self.fs) and self.fs > 0):
            raise InvariantViolation(f"segment {self.segment_id!r}: fs must be positive")
        object.__setattr__(self, "fs", float(self.fs))
        gt = tuple(int(i) for i in self.gt_peaks)
        if any(b <= a for a, b in zip(gt, gt[1:])):
            raise InvariantViolation(f"segment {self.segment_id!r}: gt_peaks must be strictly increasing")
        if gt and (gt[0] < 0 or gt[-1] >= samples.size):
            raise InvariantViolation(f"segment {self.segment_id!r}: gt_peaks out of range")
        object.__setattr__(self, "gt_peaks", gt)
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "preprocessed", bool(self.preprocessed))

    def with_samples(self, samples: np.ndarray, *, preprocessed: bool | None = None) -> "SignalSegment":
        """Copy of this segment with new samples (annotations unchanged)."""
        return replace(
            self,
            samples=samples,
            preprocessed=self.preprocessed if preprocessed is None else preprocessed,
        )


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthetic beat-train segment.

    mean_ibi_s * fs must be >= 20 samples so beats stay resolvable;
    ibi_jitter_frac draws each inter-beat interval uniformly from
    mean_ibi_s * (1 +- jitter). noise_sigma is the std of white Gaussian
    noise added on top of the clean waveform. amp_scale/width_scale rescale
    the per-modality beat template.
    """

    modality: Modality = Modality.ECG
    fs: float = 100.0
    duration_samples: int = 1000
    mean_ibi_s: float = 1.0
    ibi_jitter_frac: float = 0.0
    noise_sigma: float = 0.0
    amp_scale: float = 1.0
    width_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if self.fs <= 0:
            raise InvariantViolation("fs must be positive")
        if self.duration_samples < 2:
            raise InvariantViolation("duration_samples must be >= 2")
        if self.mean_ibi_s * self.fs < 20:
            raise InvariantViolation("mean_ibi_s * fs must be >= 20 samples")
        if not (0.0 <= self.ibi_jitter_frac < 0.5):
            raise InvariantViolation("ibi_jitter_frac must lie in [0, 0.5)")
        if self.noise_sigma < 0:
            raise InvariantViolation("noise_sigma must be >= 0")
        if self.amp_scale <= 0 or self.width_scale <= 0:
            raise InvariantViolation("morphology scales must be positive")


# Per-beat templates: (delay_s, amplitude, sigma_rise_s, sigma_decay_s) per
# component, with the dominant fiducial pinned at delay 0. Satellite waves sit
# close enough to exercise min-distance pruning at realistic scales.
_TEMPLATES: dict[Modality, tuple[tuple[float, float, float, float], ...]] = {
    Modality.ECG: (
        (-0.180, 0.12, 0.025, 0.025),   # P
        (-0.045, -0.12, 0.012, 0.012),  # Q
        (0.000, 2.60, 0.016, 0.016),    # R (fiducial)
        (0.045, -0.25, 0.014, 0.014),   # S
        (0.300, 0.45, 0.055, 0.055),    # T
    ),
    Modality.PPG: (
        (0.000, 2.00, 0.035, 0.060),    # systolic apex (fiducial), asymmetric
        (0.080, 0.30, 0.022, 0.022),    # post-systolic shoulder
        (0.300, 0.45, 0.050, 0.050),    # dicrotic bump
    ),
    Modality.BCG: (
        (-0.090, 0.35, 0.018, 0.018),   # H
        (-0.045, -0.85, 0.016, 0.016),  # I
        (0.000, 2.20, 0.016, 0.016),    # J (fiducial)
        (0.050, -0.95, 0.018, 0.018),   # K
        (0.120, 0.38, 0.022, 0.022),    # L
    ),
    Modality.BSG: (
        (-0.100, 0.40, 0.020, 0.020),
        (-0.050, -1.00, 0.020, 0.020),
        (0.000, 2.00, 0.020, 0.020),    # fiducial
        (0.055, -1.10, 0.022, 0.022),
        (0.130, 0.45, 0.030, 0.030),
    ),
    Modality.SYNTH: (
        (0.000, 2.00, 0.030, 0.030),    # single bump (fiducial)
    ),
}


def synthesize_segment(spec: SynthSpec, *, segment_id: str | None = None,
                       subject_id: str = "synth") -> SignalSegment:
    """Render one synthetic segment from ``spec``.

    Deterministic for a given rng_seed (PCG64 stream). The first apex lands
    near half an IBI into the segment and subsequent apexes follow the
    jittered IBIs; apexes too close to either edge are dropped so each
    annotated peak has two neighbors.
    """
    rng = np.random.default_rng(spec.rng_seed)
    fs = spec.fs
    n = spec.duration_samples
    duration_s = n / fs

    # Draw more intervals than can possibly fit, then walk forward.
    max_beats = int(duration_s / (spec.mean_ibi_s * (1 - spec.ibi_jitter_frac))) + 3
    jitter = rng.uniform(-spec.ibi_jitter_frac, spec.ibi_jitter_frac, size=max_beats)
    ibis = spec.mean_ibi_s * (1.0 + jitter)

    apex_indices: list[int] = []
    t = 0.5 * spec.mean_ibi_s
    for k in range(max_beats):
        idx = int(round(t * fs))
        if idx > n - 3:
            break
        if idx >= 2:
            apex_indices.append(idx)
        t += ibis[k]

    template = _TEMPLATES[spec.modality]
    grid = np.arange(n, dtype=np.float64)
    samples = np.zeros(n, dtype=np.float64)
    for apex in apex_indices:
        for delay_s, amp, sig_l, sig_r in template:
            center = apex + delay_s * fs
            sigma = np.where(grid < center, sig_l, sig_r) * spec.width_scale * fs
            samples += (amp * spec.amp_scale) * np.exp(-0.5 * ((grid - center) / sigma) ** 2)

    if spec.noise_sigma > 0:
        samples += rng.normal(0.0, spec.noise_sigma, size=n)

    if segment_id is None:
        segment_id = f"{spec.modality.value.lower()}-{spec.rng_seed:06d}"
    return SignalSegment(
        segment_id=segment_id,
        subject_id=subject_id,
        modality=spec.modality,
        fs=fs,
        samples=samples,
        gt_peaks=tuple(apex_indices),
        preprocessed=False,
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def _segment_to_record(seg: SignalSegment) -> dict:
    return {
        "segment_id": seg.segment_id,
        "subject_id": seg.subject_id,
        "modality": seg.modality.value,
        "fs": seg.fs,
        "samples": [float(v) for v in seg.samples],
        "gt_peaks": list(seg.gt_peaks),
        "preprocessed": seg.preprocessed,
    }


def _record_to_segment(rec: dict, location: str) -> SignalSegment:
    if not isinstance(rec, dict):
        raise FormatError(location, "record is not an object")
    missing = [k for k in RECORD_KEYS if k not in rec]
    if missing:
        raise FormatError(location, f"missing keys: {', '.join(missing)}")
    try:
        modality = Modality(rec["modality"])
    except ValueError:
        raise FormatError(location, f"unknown modality {rec['modality']!r}") from None
    try:
        return SignalSegment(
            segment_id=str(rec["segment_id"]),
            subject_id=str(rec["subject_id"]),
            modality=modality,
            fs=rec["fs"],
            samples=np.asarray(rec["samples"], dtype=np.float64),
            gt_peaks=tuple(rec["gt_peaks"]),
            preprocessed=rec["preprocessed"],
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(location, f"bad field value: {exc}") from None


def load_segments(path: str | Path, fmt: RecordFormat = RecordFormat.RECORDS, *,
                  fs: float = 100.0, modality: Modality = Modality.SYNTH) -> list[SignalSegment]:
    """Load segments from ``path``.

    For RECORDS files every line is a self-contained record. For CSV files
    the sampling rate and modality are not part of the format, so they come
    from the ``fs``/``modality`` keywords; segment and subject ids default to
    the file stem, and ground truth is read from ``<name>.peaks.csv`` when
    that sidecar exists.

    Raises FileNotFoundError, FormatError (with file:line location) or
    InvariantViolation.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    fmt = RecordFormat(fmt)
    if fmt is RecordFormat.RECORDS:
        segments = []
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                location = f"{path}:{lineno}"
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(location, f"invalid JSON: {exc.msg}") from None
                segments.append(_record_to_segment(rec, location))
        return segments

    # CSV: one segment per file.
    values = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "value"]:
            raise FormatError(f"{path}:1", "expected header 'index,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}", "expected two columns")
            try:
                idx, val = int(row[0]), float(row[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}", f"bad row {row!r}") from None
            if idx != len(values):
                raise FormatError(f"{path}:{lineno}", f"non-consecutive index {idx}")
            values.append(val)

    gt: tuple[int, ...] = ()
    sidecar = path.with_name(path.stem + ".peaks.csv")
    if sidecar.exists():
        peaks = []
        with sidecar.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["index"]:
                raise FormatError(f"{sidecar}:1", "expected header 'index'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    peaks.append(int(row[0]))
                except ValueError:
                    raise FormatError(f"{sidecar}:{lineno}", f"bad index {row!r}") from None
        gt = tuple(peaks)

    return [SignalSegment(
        segment_id=path.stem,
        subject_id=path.stem,
        modality=modality,
        fs=fs,
        samples=np.asarray(values, dtype=np.float64),
        gt_peaks=gt,
    )]


def write_segments(path: str | Path, segments: Iterable[SignalSegment],
                   fmt: RecordFormat = RecordFormat.RECORDS) -> None:
    """Write segments in the canonical serialization (LF line endings,
    shortest round-trip float encoding). load(write(x)) == x and writing
    loaded canonical files is byte-identical."""
    path = Path(path)
    fmt = RecordFormat(fmt)
    if fmt is RecordFormat.RECORDS:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for seg in segments:
                fh.write(json.dumps(_segment_to_record(seg)) + "\n")
        return

    segments = list(segments)
    if len(segments) != 1:
        raise InvariantViolation("CSV holds exactly one segment per file")
    seg = segments[0]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(seg.samples):
            fh.write(f"{i},{v!r}\n")
    if seg.gt_peaks:
        sidecar = path.with_name(path.stem + ".peaks.csv")
        with sidecar.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("index\n")
            for i in seg.gt_peaks:
                fh.write(f"{i}\n")
