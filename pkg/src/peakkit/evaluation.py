"""Detection scoring: tolerance matching, PRF, rate statistics, folds, tests.

Matching is one-to-one and greedy by ascending |time error|: among all
(prediction, truth) pairs inside tolerance, the closest pair is accepted
first (ties resolved toward the smaller truth index, then the smaller
prediction index), and both members leave the pool.

The tolerance radius around each true peak is either fixed (milliseconds)
or a percentage of the local inter-beat interval: the interval to the
previous true peak, the following interval for the first peak, and a 1.0 s
fallback when there is only one true peak.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateSample,
    GroundTruthDegenerate,
    InsufficientPeaks,
    InvariantViolation,
    NoPeriodFound,
    NotSorted,
    TooFewSubjects,
)
from .segments import SignalSegment


class ToleranceKind(str, Enum):
    FIXED_MS = "FIXED_MS"
    RELATIVE_IBI_PCT = "RELATIVE_IBI_PCT"


@dataclass(frozen=True)
class TolerancePolicy:
    kind: ToleranceKind = ToleranceKind.FIXED_MS
    value: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ToleranceKind(self.kind))
        if self.value <= 0:
            raise InvariantViolation("tolerance value must be positive")

    @property
    def label(self) -> str:
        return f"{self.kind.value}:{self.value:g}"


def fixed_ms(value: float = 30.0) -> TolerancePolicy:
    return TolerancePolicy(ToleranceKind.FIXED_MS, value)


def relative_ibi_pct(value: float = 5.0) -> TolerancePolicy:
    return TolerancePolicy(ToleranceKind.RELATIVE_IBI_PCT, value)


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]   # (pred index, gt index, delta_s)
    tp: int
    fp: int
    fn: int
    tolerance_used_s: tuple[float, ...]         # per gt peak, matching order


def _check_sorted(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64)
    if arr.ndim != 1:
        raise NotSorted(f"{name} must be one-dimensional")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise NotSorted(f"{name} must be strictly increasing")
    return arr


def gt_tolerances_s(gt: np.ndarray, fs: float, policy: TolerancePolicy) -> np.ndarray:
    """Per-truth-peak tolerance radius in seconds under ``policy``."""
    gt = np.asarray(gt, dtype=np.int64)
    if policy.kind is ToleranceKind.FIXED_MS:
        return np.full(gt.size, policy.value / 1000.0)
    tol = np.empty(gt.size, dtype=np.float64)
    if gt.size == 1:
        tol[0] = policy.value / 100.0 * 1.0     # lone peak: 1.0 s fallback IBI
        return tol
    ibis = np.diff(gt) / fs
    tol[0] = policy.value / 100.0 * ibis[0]     # first peak uses the next interval
    tol[1:] = policy.value / 100.0 * ibis       # others use the previous interval
    return tol


def match_peaks(pred: Sequence[int], gt: Sequence[int], fs: float,
                policy: TolerancePolicy = TolerancePolicy()) -> MatchResult:
    """Greedy one-to-one tolerance matching (see module docstring)."""
    pred = _check_sorted("pred", np.asarray(pred))
    gt = _check_sorted("gt", np.asarray(gt))
    if fs <= 0:
        raise InvariantViolation("fs must be positive")
    tol = gt_tolerances_s(gt, fs, policy)

    candidates = []
    for j, g in enumerate(gt):
        delta = (pred - g) / fs
        ok = np.flatnonzero(np.abs(delta) <= tol[j])
        for i in ok:
            candidates.append((abs(delta[i]), j, int(i), float(delta[i])))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    pred_used = np.zeros(pred.size, dtype=bool)
    gt_used = np.zeros(gt.size, dtype=bool)
    pairs = []
    for _, j, i, delta in candidates:
        if pred_used[i] or gt_used[j]:
            continue
        pred_used[i] = True
        gt_used[j] = True
        pairs.append((int(pred[i]), int(gt[j]), delta))
    pairs.sort(key=lambda p: p[1])
    tp = len(pairs)
    return MatchResult(
        pairs=tuple(pairs),
        tp=tp,
        fp=int(pred.size - tp),
        fn=int(gt.size - tp),
        tolerance_used_s=tuple(float(t) for t in tol),
    )


def prf(match: MatchResult) -> tuple[float, float, float]:
    """(precision, recall, f1). An empty denominator scores 0, so an empty
    prediction against a non-empty truth is (0, 0, 0), never a free pass."""
    p = match.tp / (match.tp + match.fp) if (match.tp + match.fp) else 0.0
    r = match.tp / (match.tp + match.fn) if (match.tp + match.fn) else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
    return p, r, f1


# ---------------------------------------------------------------------------
# Heart rate and variability
# ---------------------------------------------------------------------------

def intervals_s(peaks: Sequence[int], fs: float) -> np.ndarray:
    """Consecutive peak-to-peak intervals in seconds ([] for < 2 peaks)."""
    peaks = _check_sorted("peaks", np.asarray(peaks))
    if fs <= 0:
        raise InvariantViolation("fs must be positive")
    if peaks.size < 2:
        return np.empty(0, dtype=np.float64)
    return np.diff(peaks) / fs


def heart_rate_bpm(ibis_s: Sequence[float]) -> float:
    ibis = np.asarray(ibis_s, dtype=np.float64)
    if ibis.size < 1:
        raise InsufficientPeaks("heart rate needs at least one interval")
    mean = float(np.mean(ibis))
    if mean <= 0:
        raise InvariantViolation("intervals must be positive")
    return 60.0 / mean


def sdnn_ms(ibis_s: Sequence[float]) -> float:
    """Std of intervals (sample std, ddof=1) in milliseconds."""
    ibis = np.asarray(ibis_s, dtype=np.float64)
    if ibis.size < 2:
        raise InsufficientPeaks("SDNN needs at least two intervals")
    return float(np.std(ibis, ddof=1)) * 1000.0


def rmssd_ms(ibis_s: Sequence[float]) -> float:
    """Root mean square of successive interval differences, milliseconds."""
    ibis = np.asarray(ibis_s, dtype=np.float64)
    if ibis.size < 2:
        raise InsufficientPeaks("RMSSD needs at least two intervals")
    return float(np.sqrt(np.mean(np.diff(ibis) ** 2))) * 1000.0


def hr_hrv(peaks: Sequence[int], fs: float, hrv_method: str = "sdnn") -> tuple[float, float]:
    """(heart rate bpm, HRV ms) from peak indices. hrv_method: sdnn | rmssd."""
    ibis = intervals_s(peaks, fs)
    hr = heart_rate_bpm(ibis)
    if hrv_method == "sdnn":
        return hr, sdnn_ms(ibis)
    if hrv_method == "rmssd":
        return hr, rmssd_ms(ibis)
    raise InvariantViolation(f"unknown hrv_method {hrv_method!r}")


@dataclass(frozen=True)
class HrHrvErrors:
    """Absolute and percentage errors, with degenerate cases excluded.

    A prediction with too few peaks for a statistic is never sentinel-scored;
    the corresponding fields stay None and the ``excluded`` tuple names the
    skipped statistics ("hr", "hrv", and "hrv_mape" when the reference HRV
    is zero so a percentage is undefined).
    """

    hr_mae_bpm: float | None
    hr_mape_pct: float | None
    hrv_mae_ms: float | None
    hrv_mape_pct: float | None
    excluded: tuple[str, ...] = ()


def hr_hrv_errors(pred: Sequence[int], gt: Sequence[int], fs: float,
                  hrv_method: str = "sdnn") -> HrHrvErrors:
    """Compare predicted vs annotated rate statistics on one segment.

    Raises GroundTruthDegenerate when the annotations cannot yield a heart
    rate (< 2 peaks). A ground truth with exactly 2 peaks yields HR but no
    HRV, which excludes the HRV comparison rather than erroring.
    """
    gt_ibis = intervals_s(gt, fs)
    if gt_ibis.size < 1:
        raise GroundTruthDegenerate("ground truth yields no heart rate")
    gt_hr = heart_rate_bpm(gt_ibis)

    pred_ibis = intervals_s(pred, fs)
    excluded: list[str] = []
    hr_mae = hr_mape = None
    if pred_ibis.size >= 1:
        hr_mae = abs(heart_rate_bpm(pred_ibis) - gt_hr)
        hr_mape = hr_mae / gt_hr * 100.0
    else:
        excluded.append("hr")

    hrv_mae = hrv_mape = None
    hrv_fn = {"sdnn": sdnn_ms, "rmssd": rmssd_ms}.get(hrv_method)
    if hrv_fn is None:
        raise InvariantViolation(f"unknown hrv_method {hrv_method!r}")
    if gt_ibis.size < 2:
        excluded.append("hrv")
    elif pred_ibis.size < 2:
        excluded.append("hrv")
    else:
        gt_hrv = hrv_fn(gt_ibis)
        hrv_mae = abs(hrv_fn(pred_ibis) - gt_hrv)
        if gt_hrv > 0:
            hrv_mape = hrv_mae / gt_hrv * 100.0
        else:
            excluded.append("hrv_mape")
    return HrHrvErrors(hr_mae, hr_mape, hrv_mae, hrv_mape, tuple(excluded))


# ---------------------------------------------------------------------------
# Per-segment score rows
# ---------------------------------------------------------------------------

SCORE_CSV_HEADER = ("segment_id", "detector", "policy", "precision", "recall", "f1",
                    "hr_mae", "hr_mape", "hrv_mae", "hrv_mape", "excluded_flags")


@dataclass(frozen=True)
class SegmentScore:
    segment_id: str
    detector: str
    policy: str
    precision: float
    recall: float
    f1: float
    hr_mae: float | None
    hr_mape: float | None
    hrv_mae: float | None
    hrv_mape: float | None
    excluded: tuple[str, ...] = ()


def score_segment(segment_id: str, detector: str, pred: Sequence[int], gt: Sequence[int],
                  fs: float, policy: TolerancePolicy = TolerancePolicy()) -> SegmentScore:
    match = match_peaks(pred, gt, fs, policy)
    p, r, f1 = prf(match)
    errs = hr_hrv_errors(pred, gt, fs)
    return SegmentScore(segment_id, detector, policy.label, p, r, f1,
                        errs.hr_mae_bpm, errs.hr_mape_pct,
                        errs.hrv_mae_ms, errs.hrv_mape_pct, errs.excluded)


def write_score_csv(path: str | Path, rows: Sequence[SegmentScore]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_CSV_HEADER)
        for s in rows:
            writer.writerow([
                s.segment_id, s.detector, s.policy,
                repr(s.precision), repr(s.recall), repr(s.f1),
                "" if s.hr_mae is None else repr(s.hr_mae),
                "" if s.hr_mape is None else repr(s.hr_mape),
                "" if s.hrv_mae is None else repr(s.hrv_mae),
                "" if s.hrv_mape is None else repr(s.hrv_mape),
                ";".join(s.excluded),
            ])


def aggregate_scores(rows: Sequence[SegmentScore]) -> dict:
    """Mean +- sample std per metric over rows, skipping excluded fields,
    plus exclusion counts (always reported)."""
    out: dict = {"n_segments": len(rows), "exclusions": {}}
    for s in rows:
        for flag in s.excluded:
            out["exclusions"][flag] = out["exclusions"].get(flag, 0) + 1
    for name in ("precision", "recall", "f1", "hr_mae", "hr_mape", "hrv_mae", "hrv_mape"):
        vals = [getattr(s, name) for s in rows if getattr(s, name) is not None]
        if vals:
            arr = np.asarray(vals, dtype=np.float64)
            out[name] = {"mean": float(arr.mean()),
                         "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                         "n": int(arr.size)}
    return out


# ---------------------------------------------------------------------------
# Cross-validation folds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    mapping: dict[str, int] = field(hash=False)

    def fold_of(self, subject_id: str) -> int:
        return self.mapping[subject_id]


def cv_split(subject_ids: Sequence[str], k: int = 4, seed: int = 0) -> FoldAssignment:
    """Deterministic subject-independent folds: the sorted unique subject
    ids are shuffled with the seeded generator and dealt round-robin, so
    fold sizes differ by at most one."""
    unique = sorted(set(str(s) for s in subject_ids))
    if k < 2:
        raise InvariantViolation("k must be >= 2")
    if len(unique) < k:
        raise TooFewSubjects(f"need >= {k} distinct subjects, got {len(unique)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    mapping = {unique[int(j)]: pos % k for pos, j in enumerate(order)}
    return FoldAssignment(k=k, seed=seed, mapping=mapping)


# ---------------------------------------------------------------------------
# Welch's t-test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WelchResult:
    t_stat: float
    dof: float
    p_two_tailed: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise InvariantViolation("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to about 1e-14 absolute accuracy."""
    if not (0.0 <= x <= 1.0):
        raise InvariantViolation("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t: float, dof: float) -> float:
    """Two-sided tail probability 2 * (1 - CDF(|t|)) of Student's t."""
    if dof <= 0:
        raise InvariantViolation("dof must be positive")
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch's unequal-variance t-test with Welch-Satterthwaite dof.

    Raises DegenerateSample when either sample has fewer than two values or
    both sample variances are zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise DegenerateSample("both samples need >= 2 values")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    sa, sb = va / a.size, vb / b.size
    denom = sa + sb
    if denom <= 0.0:
        raise DegenerateSample("both samples are constant")
    t = (float(np.mean(a)) - float(np.mean(b))) / math.sqrt(denom)
    dof = denom ** 2 / (sa ** 2 / (a.size - 1) + sb ** 2 / (b.size - 1))
    return WelchResult(t_stat=t, dof=dof, p_two_tailed=student_t_sf2(t, dof))


STATS_CSV_HEADER = ("metric", "t", "dof", "p")


def write_stats_csv(path: str | Path, rows: Sequence[tuple[str, WelchResult]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATS_CSV_HEADER)
        for metric, res in rows:
            writer.writerow([metric, repr(res.t_stat), repr(res.dof), repr(res.p_two_tailed)])


# ---------------------------------------------------------------------------
# Noise stress sweep
# ---------------------------------------------------------------------------

def noise_sweep(seg: SignalSegment, detect_fn: Callable[[SignalSegment], np.ndarray],
                sigmas: Sequence[float], seed: int = 0,
                policy: TolerancePolicy = TolerancePolicy(),
                detector_name: str = "detector") -> list[tuple[float, SegmentScore]]:
    """Re-run a detector on noise-corrupted copies of one segment.

    White Gaussian noise with each sigma (in the units of the stored
    samples) is drawn from an independent seeded substream; a sigma = 0
    clean row is prepended. The segment itself is never mutated. A detector
    that legitimately finds nothing usable in the corrupted signal
    (NoPeriodFound) scores as zero detections rather than aborting the
    sweep.
    """
    sigmas = [float(s) for s in sigmas]
    if any(s <= 0 for s in sigmas):
        raise InvariantViolation("sweep sigmas must be positive (0 is prepended)")
    rows = []
    for k, sigma in enumerate([0.0] + sigmas):
        if sigma == 0.0:
            noisy = seg
        else:
            rng = np.random.default_rng([seed, k])
            noisy = seg.with_samples(seg.samples + rng.normal(0.0, sigma, seg.samples.size))
        try:
            pred = [int(i) for i in detect_fn(noisy)]
        except NoPeriodFound:
            pred = []
        rows.append((sigma, score_segment(seg.segment_id, detector_name,
                                          pred, seg.gt_peaks, seg.fs, policy)))
    return rows
