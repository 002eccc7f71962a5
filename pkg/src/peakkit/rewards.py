"""Multi-objective reward scoring for model-emitted peak text.

Canonical output shape (braces optional, whitespace tolerant)::

    J: [2020-01-01 00:00:17, 2020-01-01 00:01:51] Explanation: ...

Four components combine into the total: format (binary gate), detection
(F1 at a fixed tolerance), completeness exp(-|n_pred - n_gt|), and heart
rate consistency exp(-2 * min(1, relative_error)). When the format gate
fails, every other component scores 0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import GroundTruthDegenerate, InvariantViolation
from .evaluation import fixed_ms, heart_rate_bpm, intervals_s, match_peaks, prf
from .representation import TIMESTAMP_PATTERN, index_to_timestamp, timestamp_to_index

_BODY = (r"(?P<label>[A-Za-z][A-Za-z0-9_]*)\s*:\s*\[(?P<ts>[^\]]*)\]"
         r"(?:\s*Explanation\s*:\s*(?P<expl>.*?))?")
_PLAIN_RE = re.compile(r"^\s*" + _BODY + r"\s*$", re.DOTALL)
_BRACED_RE = re.compile(r"^\s*\{\s*" + _BODY + r"\s*\}\s*$", re.DOTALL)
_TS_FULL_RE = re.compile(rf"^{TIMESTAMP_PATTERN}$")


@dataclass(frozen=True)
class ModelOutput:
    peak_label: str | None
    timestamps: tuple[str, ...]
    explanation: str
    raw: str = field(compare=False)
    ok: bool = field(compare=False, default=True)
    failure: str | None = field(compare=False, default=None)
    expected_label: str | None = field(compare=False, default=None)

    @property
    def timestamps_monotone(self) -> bool:
        return all(a < b for a, b in zip(self.timestamps, self.timestamps[1:]))

    @property
    def label_matches(self) -> bool:
        return self.expected_label is None or self.peak_label == self.expected_label


def parse_model_output(text: str, expected_label: str | None = None) -> ModelOutput:
    """Parse model text. Never raises; failures come back as ok=False."""
    if not isinstance(text, str):
        return ModelOutput(None, (), "", raw=repr(text), ok=False,
                           failure="not_text", expected_label=expected_label)
    m = _PLAIN_RE.match(text) or _BRACED_RE.match(text)
    if m is None:
        return ModelOutput(None, (), "", raw=text, ok=False,
                           failure="no_template_match", expected_label=expected_label)
    ts_body = m.group("ts").strip()
    timestamps: list[str] = []
    if ts_body:
        for part in ts_body.split(","):
            part = part.strip()
            if not _TS_FULL_RE.match(part):
                return ModelOutput(None, (), "", raw=text, ok=False,
                                   failure=f"bad_timestamp:{part!r}",
                                   expected_label=expected_label)
            timestamps.append(part)
    return ModelOutput(
        peak_label=m.group("label"),
        timestamps=tuple(timestamps),
        explanation=(m.group("expl") or "").strip(),
        raw=text,
        ok=True,
        expected_label=expected_label,
    )


def format_model_output(output: ModelOutput) -> str:
    """Canonical text for an output (inverse of parse on valid outputs)."""
    body = f"{output.peak_label}: [{', '.join(output.timestamps)}]"
    if output.explanation:
        body += f" Explanation: {output.explanation}"
    return body


@dataclass(frozen=True)
class RewardWeights:
    format: float = 0.1
    detection: float = 0.6
    completeness: float = 0.15
    hr: float = 0.15

    def __post_init__(self):
        if min(self.format, self.detection, self.completeness, self.hr) < 0:
            raise InvariantViolation("weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_detection: float
    r_complete: float
    r_hr: float
    total: float


def format_reward(output: ModelOutput) -> float:
    """1.0 iff the text parsed, timestamps strictly increase, and the label
    matches the expected peak type (when one was given)."""
    return 1.0 if (output.ok and output.timestamps_monotone and output.label_matches) else 0.0


def detection_reward(pred_peaks, gt_peaks, fs: float, tol_ms: float = 30.0) -> float:
    """F1 under the fixed matching tolerance."""
    return prf(match_peaks(pred_peaks, gt_peaks, fs, fixed_ms(tol_ms)))[2]


def complete_reward(n_pred: int, n_gt: int) -> float:
    return math.exp(-abs(int(n_pred) - int(n_gt)))


def hr_consistency_reward(pred_peaks, gt_peaks, fs: float) -> float:
    """exp(-2 * min(1, |HR_pred - HR_ref| / HR_ref)).

    Predictions without a measurable rate (< 2 peaks) score at the capped
    error, exp(-2). Raises GroundTruthDegenerate when the reference has no
    rate.
    """
    gt_ibis = intervals_s(gt_peaks, fs)
    if gt_ibis.size < 1:
        raise GroundTruthDegenerate("reference peaks yield no heart rate")
    gt_hr = heart_rate_bpm(gt_ibis)
    pred_ibis = intervals_s(pred_peaks, fs)
    if pred_ibis.size < 1:
        rel_err = 1.0
    else:
        rel_err = min(1.0, abs(heart_rate_bpm(pred_ibis) - gt_hr) / gt_hr)
    return math.exp(-2.0 * rel_err)


def total_reward(r_format: float, r_detection: float, r_complete: float, r_hr: float,
                 weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    total = math.fsum([
        weights.format * r_format,
        weights.detection * r_detection,
        weights.completeness * r_complete,
        weights.hr * r_hr,
    ])
    return RewardBreakdown(r_format, r_detection, r_complete, r_hr, total)


def score_output(raw_text: str, gt_peaks, fs: float, *,
                 expected_label: str | None = None,
                 seconds_per_sample=1,
                 weights: RewardWeights = RewardWeights(),
                 tol_ms: float = 30.0) -> tuple[ModelOutput, RewardBreakdown]:
    """Parse and fully score one model output against annotated peaks.

    Timestamps must decode under the segment's timestamp scale; text whose
    timestamps cannot be anchored fails the format gate. A failed gate
    zeroes every other component.
    """
    output = parse_model_output(raw_text, expected_label)
    r_fmt = format_reward(output)
    pred_indices: list[int] = []
    if r_fmt == 1.0:
        try:
            pred_indices = [timestamp_to_index(t, seconds_per_sample)
                            for t in output.timestamps]
        except Exception:
            r_fmt = 0.0
        else:
            if any(b <= a for a, b in zip(pred_indices, pred_indices[1:])):
                r_fmt = 0.0  # distinct stamps can still collide at coarse scales
    if r_fmt == 0.0:
        return output, total_reward(0.0, 0.0, 0.0, 0.0, weights)
    gt = [int(g) for g in gt_peaks]
    r_det = detection_reward(pred_indices, gt, fs, tol_ms)
    r_com = complete_reward(len(pred_indices), len(gt))
    r_hr = hr_consistency_reward(pred_indices, gt, fs)
    return output, total_reward(r_fmt, r_det, r_com, r_hr, weights)


def reference_output(gt_peaks, seconds_per_sample=1, label: str = "R",
                     explanation: str = "") -> str:
    """Render the ideal output text for a set of annotated peaks."""
    stamps = [index_to_timestamp(int(g), seconds_per_sample) for g in gt_peaks]
    out = ModelOutput(peak_label=label, timestamps=tuple(stamps),
                      explanation=explanation, raw="")
    return format_model_output(out)


def score_records(records) -> list[dict]:
    """Batch scorer for JSONL-shaped dicts.

    Each record needs segment_id, raw_output, fs and gt_peaks (sample
    indices); optional expected_label and seconds_per_sample. Returns the
    input fields mirrored plus the reward breakdown.
    """
    out = []
    for rec in records:
        output, breakdown = score_output(
            rec["raw_output"],
            rec["gt_peaks"],
            float(rec["fs"]),
            expected_label=rec.get("expected_label"),
            seconds_per_sample=rec.get("seconds_per_sample", 1),
        )
        row = dict(rec)
        row.update({
            "parse_ok": output.ok,
            "r_format": breakdown.r_format,
            "r_detection": breakdown.r_detection,
            "r_complete": breakdown.r_complete,
            "r_hr": breakdown.r_hr,
            "total": breakdown.total,
        })
        out.append(row)
    return out
