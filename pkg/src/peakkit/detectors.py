"""Classical beat detectors.

Five published baseline algorithms, each restated on top of the shared
preprocessing and extrema helpers:

* pan_tompkins  - QRS detection via derivative/squaring/integration with
  adaptive dual thresholds (Pan & Tompkins, 1985). ECG.
* nabian        - fixed-window argmax with a local-maximum check
  (Nabian et al., 2018). ECG.
* elgendi       - two moving averages over the squared signal generating
  blocks of interest (Elgendi, 2013). PPG.
* bishop        - local maxima scalogram over all scales
  (Bishop & Ercole, 2018). PPG.
* choi          - autocorrelation period estimate plus per-window argmax
  (Choi et al., 2009). BCG/BSG.

All detectors take a preprocessed segment, are deterministic, return
strictly increasing sample indices, and break amplitude ties toward the
leftmost index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import (
    InvariantViolation,
    NoPeriodFound,
    NotPreprocessed,
    TooShort,
    UnsupportedRate,
)
from .preprocess import FilterSpec, butterworth_bandpass
from .representation import local_extrema
from .segments import SignalSegment


class Algorithm(str, Enum):
    PAN_TOMPKINS = "pan_tompkins"
    NABIAN = "nabian"
    ELGENDI = "elgendi"
    BISHOP = "bishop"
    CHOI = "choi"


@dataclass(frozen=True)
class DetectorConfig:
    algorithm: Algorithm
    params: dict = field(default_factory=dict, hash=False)
    refractory_s: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.refractory_s <= 0:
            raise InvariantViolation("refractory_s must be positive")


def _require_preprocessed(seg: SignalSegment) -> np.ndarray:
    if not seg.preprocessed:
        raise NotPreprocessed(f"segment {seg.segment_id!r} must be preprocessed first")
    return np.asarray(seg.samples, dtype=np.float64)


def _strict_maxima_set(x: np.ndarray) -> set[int]:
    maxima, _ = local_extrema(x)
    return set(int(i) for i in maxima)


# ---------------------------------------------------------------------------
# Pan-Tompkins
# ---------------------------------------------------------------------------

def pan_tompkins(seg: SignalSegment) -> np.ndarray:
    """Pan-Tompkins QRS detector.

    Band-pass 5-15 Hz, 5-point derivative, squaring, 150 ms moving-window
    integration, then adaptive dual thresholds over the integration peaks
    with a 200 ms refractory and a search-back pass at 1.66x the running
    RR average. Detections are refined to the local signal maximum within
    +-75 ms. Requires fs >= 50 Hz.
    """
    x = _require_preprocessed(seg)
    fs = seg.fs
    if fs < 50:
        raise UnsupportedRate(f"pan_tompkins needs fs >= 50 Hz, got {fs}")

    # Stage 1: 5-15 Hz band-pass to isolate QRS energy.
    bp = butterworth_bandpass(x, fs, FilterSpec(order=2, low_hz=5.0, high_hz=15.0))

    # Stage 2-4: derivative, squaring, 150 ms integration window (centered,
    # so fiducials stay aligned with the QRS complex).
    deriv = np.convolve(bp, np.array([2.0, 1.0, 0.0, -1.0, -2.0]) / 8.0, mode="same")
    squared = deriv ** 2
    win = max(1, int(round(0.150 * fs)))
    integrated = np.convolve(squared, np.ones(win) / win, mode="same")

    cand, _ = local_extrema(integrated)
    if cand.size == 0:
        return np.empty(0, dtype=np.int64)
    heights = integrated[cand]

    # Adaptive dual thresholds seeded from a 2 s training window.
    train = integrated[: min(integrated.size, int(round(2.0 * fs)))]
    spki = 0.25 * float(train.max())
    npki = 0.5 * float(train.mean())
    threshold = npki + 0.25 * (spki - npki)

    refractory = int(round(0.2 * fs))
    accepted: list[int] = []
    rr: list[float] = []

    def accept(pos: int, height: float, from_searchback: bool) -> None:
        if accepted:
            rr.append((pos - accepted[-1]) / fs)
            del rr[:-8]
        accepted.append(pos)
        nonlocal spki, threshold
        if from_searchback:
            spki = 0.25 * height + 0.75 * spki
        else:
            spki = 0.125 * height + 0.875 * spki
        threshold = npki + 0.25 * (spki - npki)

    for k in range(cand.size):
        pos, height = int(cand[k]), float(heights[k])
        if accepted and pos - accepted[-1] <= refractory:
            continue
        if height > threshold:
            accept(pos, height, from_searchback=False)
        else:
            npki = 0.125 * height + 0.875 * npki
            threshold = npki + 0.25 * (spki - npki)
            # Search back when the expected beat seems overdue.
            if rr and accepted and (pos - accepted[-1]) / fs > 1.66 * float(np.mean(rr)):
                window = (cand > accepted[-1] + refractory) & (cand <= pos)
                back = np.flatnonzero(window & (heights > 0.5 * threshold))
                if back.size:
                    best = back[np.argmax(heights[back])]
                    accept(int(cand[best]), float(heights[best]), from_searchback=True)

    # Refine each fiducial to the tallest signal sample within +-75 ms.
    half = int(round(0.075 * fs))
    refined = []
    for pos in accepted:
        lo, hi = max(0, pos - half), min(x.size, pos + half + 1)
        refined.append(lo + int(np.argmax(x[lo:hi])))
    return np.unique(np.asarray(refined, dtype=np.int64))


# ---------------------------------------------------------------------------
# Nabian
# ---------------------------------------------------------------------------

def nabian(seg: SignalSegment, window_s: float = 1.0, refractory_s: float = 0.25) -> np.ndarray:
    """Per-window argmax detector: the tallest sample of each
    non-overlapping window is kept when it is a strict local maximum of the
    whole signal; survivors closer than the refractory keep the taller one
    (leftmost on ties)."""
    x = _require_preprocessed(seg)
    fs = seg.fs
    w = int(round(window_s * fs))
    if w < 1:
        raise InvariantViolation("window_s too small for this sampling rate")
    maxima = _strict_maxima_set(x)

    kept: list[int] = []
    for lo in range(0, x.size, w):
        hi = min(lo + w, x.size)
        j = lo + int(np.argmax(x[lo:hi]))
        if j in maxima:
            kept.append(j)

    refractory = refractory_s * fs
    merged: list[int] = []
    for j in kept:
        if merged and j - merged[-1] < refractory:
            if x[j] > x[merged[-1]]:
                merged[-1] = j
        else:
            merged.append(j)
    return np.asarray(merged, dtype=np.int64)


# ---------------------------------------------------------------------------
# Elgendi
# ---------------------------------------------------------------------------

def _odd_window(ms: float, fs: float) -> int:
    w = max(1, int(round(ms / 1000.0 * fs)))
    return w if w % 2 == 1 else w + 1


def elgendi(seg: SignalSegment, w1_ms: float = 111.0, w2_ms: float = 667.0,
            beta: float = 0.02) -> np.ndarray:
    """Two-moving-average systolic peak detector.

    Negative samples are clipped to zero before squaring. Blocks where the
    peak-scale moving average exceeds the beat-scale moving average plus
    beta * mean(squared) are candidate regions; blocks shorter than the
    peak window are rejected and each surviving block emits the argmax of
    the original samples.
    """
    x = _require_preprocessed(seg)
    fs = seg.fs
    w1 = _odd_window(w1_ms, fs)
    w2 = _odd_window(w2_ms, fs)
    clipped = np.clip(x, 0.0, None)
    squared = clipped ** 2
    ma_peak = np.convolve(squared, np.ones(w1) / w1, mode="same")
    ma_beat = np.convolve(squared, np.ones(w2) / w2, mode="same")
    thr1 = ma_beat + beta * float(squared.mean())
    blocks = ma_peak > thr1

    peaks = []
    edges = np.flatnonzero(np.diff(blocks.astype(np.int8)))
    starts = list(edges[blocks[edges + 1]] + 1) if edges.size else []
    ends = list(edges[~blocks[edges + 1]] + 1) if edges.size else []
    if blocks[0]:
        starts.insert(0, 0)
    if blocks[-1]:
        ends.append(blocks.size)
    for lo, hi in zip(starts, ends):
        if hi - lo < w1:
            continue
        peaks.append(lo + int(np.argmax(x[lo:hi])))
    return np.asarray(sorted(set(peaks)), dtype=np.int64)


# ---------------------------------------------------------------------------
# Bishop
# ---------------------------------------------------------------------------

def bishop(seg: SignalSegment, max_scale: int | None = None) -> np.ndarray:
    """Local maxima scalogram detector.

    m[k][i] marks samples strictly above both neighbors at distance k for
    k = 1..L. The working scale gamma is the row with the most marks
    (smallest k on ties) and peaks are the samples marked at every scale
    up to gamma. Gamma is chosen from strictly in-range marks only; when
    emitting, a comparison whose neighbor falls outside the segment counts
    as satisfied so early and late beats are not blind spots, and a final
    strict-local-max filter keeps boundary samples of monotone runs out.
    """
    x = _require_preprocessed(seg)
    n = x.size
    hard_cap = n // 2 - 1
    if hard_cap < 1:
        raise TooShort("signal too short for the scalogram")
    L = hard_cap if max_scale is None else max(1, min(int(max_scale), hard_cap))

    strict_m = np.zeros((L, n), dtype=bool)
    lenient_m = np.ones((L, n), dtype=bool)
    for k in range(1, L + 1):
        left = x[k:] > x[:n - k]      # index i in [k, n): x[i] > x[i-k]
        right = x[:n - k] > x[k:]     # index i in [0, n-k): x[i] > x[i+k]
        strict_m[k - 1, k:n - k] = left[:n - 2 * k] & right[k:]
        lenient_m[k - 1, k:] &= left
        lenient_m[k - 1, :n - k] &= right

    gamma = int(np.argmax(strict_m.sum(axis=1))) + 1
    peaks = np.flatnonzero(lenient_m[:gamma].all(axis=0))
    strict = _strict_maxima_set(x)
    return np.asarray([p for p in peaks if p in strict], dtype=np.int64)


# ---------------------------------------------------------------------------
# Choi
# ---------------------------------------------------------------------------

def choi(seg: SignalSegment, min_period_s: float = 0.4, max_period_s: float = 2.0) -> np.ndarray:
    """Autocorrelation-period detector for ballistically coupled signals.

    The beat period is the lag of the autocorrelation maximum of the
    squared signal within [min_period_s, max_period_s]; consecutive windows
    of that period each emit their argmax. The trailing remainder counts as
    a final window only when it spans at least half a period (long enough
    to plausibly hold a beat; shorter tails would emit spurious argmaxes).
    Finally any pair of peaks closer than half the median inter-peak
    interval loses its smaller-amplitude member (closest pair first) until
    no pair violates.
    """
    x = _require_preprocessed(seg)
    fs = seg.fs
    n = x.size
    lo = max(1, int(round(min_period_s * fs)))
    hi = min(int(round(max_period_s * fs)), n - 1)
    if lo > hi:
        raise NoPeriodFound("segment shorter than the minimum search period")

    squared = x ** 2
    centered = squared - squared.mean()
    ac = np.correlate(centered, centered, mode="full")[n - 1:]
    band = ac[lo:hi + 1]
    ac0 = float(ac[0])
    # Aperiodic signals (flat lines, white noise) show no autocorrelation
    # structure in the band beyond sampling fluctuation; require a clear
    # normalized maximum before trusting a period estimate.
    if ac0 <= 0 or float(band.max()) <= 0.15 * ac0:
        raise NoPeriodFound("autocorrelation is flat in the search band")
    period = lo + int(np.argmax(band))

    windows = [(s, s + period) for s in range(0, n - period + 1, period)]
    tail = windows[-1][1] if windows else 0
    if n - tail >= 0.5 * period:
        windows.append((tail, n))
    peaks = sorted({s + int(np.argmax(x[s:e])) for s, e in windows})

    # Post-filter: prune the smaller member of any too-close pair.
    while len(peaks) >= 3:
        gaps = np.diff(peaks)
        med = float(np.median(gaps))
        j = int(np.argmin(gaps))
        if gaps[j] >= 0.5 * med:
            break
        a, b = peaks[j], peaks[j + 1]
        peaks.pop(j + 1 if x[b] <= x[a] else j)
    return np.asarray(peaks, dtype=np.int64)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

_DISPATCH: dict[Algorithm, Callable] = {
    Algorithm.PAN_TOMPKINS: pan_tompkins,
    Algorithm.NABIAN: nabian,
    Algorithm.ELGENDI: elgendi,
    Algorithm.BISHOP: bishop,
    Algorithm.CHOI: choi,
}

# Parameters each algorithm accepts beyond the segment itself.
_PARAM_NAMES: dict[Algorithm, tuple[str, ...]] = {
    Algorithm.PAN_TOMPKINS: (),
    Algorithm.NABIAN: ("window_s", "refractory_s"),
    Algorithm.ELGENDI: ("w1_ms", "w2_ms", "beta"),
    Algorithm.BISHOP: ("max_scale",),
    Algorithm.CHOI: ("min_period_s", "max_period_s"),
}


def detect(seg: SignalSegment, cfg: DetectorConfig) -> np.ndarray:
    """Run the configured detector. Unknown parameter names are rejected."""
    fn = _DISPATCH[cfg.algorithm]
    allowed = _PARAM_NAMES[cfg.algorithm]
    unknown = set(cfg.params) - set(allowed)
    if unknown:
        raise InvariantViolation(
            f"{cfg.algorithm.value} does not accept parameters: {sorted(unknown)}")
    kwargs = dict(cfg.params)
    if "refractory_s" in allowed and "refractory_s" not in kwargs:
        kwargs["refractory_s"] = cfg.refractory_s
    return fn(seg, **kwargs)
