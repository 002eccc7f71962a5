"""Waveform reconstruction from candidate peaks and fidelity scoring.

How much of a signal do its candidate peaks preserve? A natural cubic
spline through the retained (index, amplitude) knots rebuilds a
continuous waveform, and the fidelity report compares it to the original:
MAE, RMSE, population Pearson r, retention ratio, and recall of the
annotated peaks among the retained candidates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import FlatInput, LengthMismatch, NotSorted, TooFewKnots
from .representation import PeakRepresentation, PolarityMode, extract_extrema, retention_ratio
from .segments import SignalSegment

_FLAT = 1e-12


@dataclass(frozen=True)
class FidelityReport:
    mae: float
    rmse: float
    pearson_r: float
    retention: float
    prominent_recall: float


def spline_reconstruct(rep: PeakRepresentation, length: int,
                       boundary: tuple[float, float] | None = None) -> np.ndarray:
    """Natural cubic spline through the representation's knots.

    ``boundary`` supplies the first and last raw samples as anchor knots at
    index 0 and length-1 (skipped when those indices are already knots).
    Without anchors the spline extrapolates beyond the outermost knots.

    Raises TooFewKnots when fewer than two knots remain.
    """
    if length < 2:
        raise TooFewKnots(f"target length {length} is too short")
    knots: dict[int, float] = {e.index: e.amplitude for e in rep.entries}
    if boundary is not None:
        first, last = float(boundary[0]), float(boundary[1])
        knots.setdefault(0, first)
        knots.setdefault(length - 1, last)
    if len(knots) < 2:
        raise TooFewKnots(f"need >= 2 knots, got {len(knots)}")
    xs = np.array(sorted(knots), dtype=np.float64)
    ys = np.array([knots[int(i)] for i in xs], dtype=np.float64)
    spline = CubicSpline(xs, ys, bc_type="natural")
    return np.asarray(spline(np.arange(length, dtype=np.float64)), dtype=np.float64)


def fidelity_metrics(original: np.ndarray, reconstruction: np.ndarray) -> tuple[float, float, float]:
    """(mae, rmse, pearson_r) between a signal and its reconstruction.

    Raises LengthMismatch on unequal lengths and FlatInput instead of
    returning NaN when either side has (population) zero variance.
    """
    original = np.asarray(original, dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if original.shape != reconstruction.shape:
        raise LengthMismatch(f"{original.shape} vs {reconstruction.shape}")
    err = reconstruction - original
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err ** 2)))
    std_a = float(np.std(original))
    std_b = float(np.std(reconstruction))
    if std_a < _FLAT or std_b < _FLAT:
        raise FlatInput("Pearson r undefined on a flat signal")
    cov = float(np.mean((original - original.mean()) * (reconstruction - reconstruction.mean())))
    return mae, rmse, cov / (std_a * std_b)


def prominent_peak_recall(rep: PeakRepresentation, gt_peaks: Sequence[int],
                          tol_samples: int = 1) -> float:
    """Fraction of annotated peaks with a retained candidate within
    +-tol_samples. Empty ground truth counts as perfect recall."""
    gt = list(gt_peaks)
    if not gt:
        return 1.0
    kept = np.array(sorted(e.index for e in rep.entries), dtype=np.int64)
    if kept.size == 0:
        return 0.0
    hits = 0
    for g in gt:
        pos = np.searchsorted(kept, g)
        best = min(
            abs(int(kept[j]) - g)
            for j in (pos - 1, pos)
            if 0 <= j < kept.size
        )
        hits += best <= tol_samples
    return hits / len(gt)


def segment_fidelity(seg: SignalSegment, min_distance: int = 0,
                     polarity_mode: PolarityMode = PolarityMode.BOTH,
                     tol_samples: int = 1) -> FidelityReport:
    """Extract at ``min_distance``, reconstruct, and score one segment."""
    rep = extract_extrema(seg, min_distance, polarity_mode)
    recon = spline_reconstruct(rep, seg.samples.size,
                               boundary=(float(seg.samples[0]), float(seg.samples[-1])))
    mae, rmse, r = fidelity_metrics(seg.samples, recon)
    return FidelityReport(
        mae=mae,
        rmse=rmse,
        pearson_r=r,
        retention=retention_ratio(rep, seg),
        prominent_recall=prominent_peak_recall(rep, seg.gt_peaks, tol_samples),
    )


def distance_sensitivity_sweep(seg: SignalSegment, distances: Sequence[int],
                               polarity_mode: PolarityMode = PolarityMode.BOTH,
                               tol_samples: int = 1) -> list[tuple[int, FidelityReport]]:
    """Fidelity at each pruning distance. ``distances`` must be ascending."""
    distances = [int(d) for d in distances]
    if any(b <= a for a, b in zip(distances, distances[1:])):
        raise NotSorted("distances must be strictly ascending")
    return [(d, segment_fidelity(seg, d, polarity_mode, tol_samples)) for d in distances]


SWEEP_CSV_HEADER = ("distance", "retention", "mae", "rmse", "pearson", "recall")


def write_sweep_csv(path: str | Path, rows: Sequence[tuple[int, FidelityReport]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for d, rep in rows:
            writer.writerow([d, repr(rep.retention), repr(rep.mae), repr(rep.rmse),
                             repr(rep.pearson_r), repr(rep.prominent_recall)])
