"""Rule-based factual audit of model explanations, plus the review bundle.

Five mechanical checks run against each model output, its candidate-peak
representation, and the annotated peaks:

1. peak_list_matches_gt    - the output's timestamp list equals the
                             annotated peaks rendered at the same scale.
2. all_timestamps_in_candidates - every full ``YYYY-MM-DD HH:MM:SS``
                             stamp cited in the explanation exists in the
                             candidate set.
3. amplitudes_consistent   - every ``(timestamp, value)`` claim in the
                             explanation matches the candidate amplitude
                             within amp_tol.
4. intervals_consistent    - every interval claim (a line citing exactly
                             two stamps and "N seconds") matches the stamp
                             difference within ibi_tol_s.
5. template_ok             - the output passes the format gate.

Claim grammar for checks 3 and 4 (the audit contract): amplitude claims
are parenthesized pairs exactly like the wire format's entries, and an
interval claim is any explanation line containing exactly two full
timestamps plus a decimal number immediately followed by the word
"seconds".

A bundle built from faithful outputs (list = annotations, explanation
citing only real candidates) passes everything; the workbench then layers
human labels (CONCISE / AMBIGUOUS / INCORRECT) on top via an append-only
log.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .errors import AlignmentError, InvalidLabel, UnknownRecord
from .representation import (
    TIMESTAMP_PATTERN,
    PeakRepresentation,
    index_to_timestamp,
)
from .rewards import ModelOutput, format_reward
from .segments import Modality, SignalSegment

LABELS = ("CONCISE", "AMBIGUOUS", "INCORRECT")

# Default peak label a model is expected to name, per modality.
EXPECTED_LABELS = {
    Modality.ECG: "R",
    Modality.PPG: "S",
    Modality.BCG: "J",
    Modality.BSG: "J",
    Modality.SYNTH: "PEAK",
}

_TS_RE = re.compile(TIMESTAMP_PATTERN)
_AMP_CLAIM_RE = re.compile(rf"\(\s*({TIMESTAMP_PATTERN})\s*,\s*(-?\d+(?:\.\d+)?)\s*\)")
_SECONDS_RE = re.compile(r"(-?\d+(?:\.\d+)?)\s*seconds\b")


@dataclass(frozen=True)
class RuleCheckReport:
    peak_list_matches_gt: bool
    all_timestamps_in_candidates: bool
    amplitudes_consistent: bool
    intervals_consistent: bool
    template_ok: bool

    @property
    def overall(self) -> bool:
        return (self.peak_list_matches_gt and self.all_timestamps_in_candidates
                and self.amplitudes_consistent and self.intervals_consistent
                and self.template_ok)

    def to_dict(self) -> dict:
        return {
            "peak_list_matches_gt": self.peak_list_matches_gt,
            "all_timestamps_in_candidates": self.all_timestamps_in_candidates,
            "amplitudes_consistent": self.amplitudes_consistent,
            "intervals_consistent": self.intervals_consistent,
            "template_ok": self.template_ok,
            "overall": self.overall,
        }


def _stamp_seconds(ts: str) -> int:
    from datetime import datetime

    from .representation import ANCHOR
    return int((datetime.strptime(ts, "%Y-%m-%d %H:%M:%S") - ANCHOR).total_seconds())


def factual_consistency_check(output: ModelOutput, rep: PeakRepresentation,
                              gt_peaks: Sequence[int], amp_tol: float = 0.005,
                              ibi_tol_s: float | None = None) -> RuleCheckReport:
    """Run the five rule checks (see module docstring).

    ibi_tol_s defaults to one sample's worth of timestamp seconds
    (the representation's scale).
    """
    if ibi_tol_s is None:
        ibi_tol_s = float(rep.ts_seconds_per_sample)
    scale = rep.ts_seconds_per_sample

    expected = tuple(index_to_timestamp(int(g), scale) for g in gt_peaks)
    peak_list_ok = output.timestamps == expected

    known = {e.timestamp: e.amplitude for e in rep.entries}
    cited = _TS_RE.findall(output.explanation)
    timestamps_ok = all(ts in known for ts in cited)

    amplitudes_ok = True
    for ts, value in _AMP_CLAIM_RE.findall(output.explanation):
        if ts not in known or abs(float(value) - known[ts]) > amp_tol:
            amplitudes_ok = False
            break

    intervals_ok = True
    for line in output.explanation.split("\n"):
        stamps = _TS_RE.findall(line)
        if len(stamps) != 2:
            continue
        claim = _SECONDS_RE.search(line)
        if claim is None:
            continue
        actual = abs(_stamp_seconds(stamps[1]) - _stamp_seconds(stamps[0]))
        if abs(float(claim.group(1)) - actual) > ibi_tol_s:
            intervals_ok = False
            break

    return RuleCheckReport(
        peak_list_matches_gt=peak_list_ok,
        all_timestamps_in_candidates=timestamps_ok,
        amplitudes_consistent=amplitudes_ok,
        intervals_consistent=intervals_ok,
        template_ok=format_reward(output) == 1.0,
    )


def render_consistent_explanation(rep: PeakRepresentation, gt_peaks: Sequence[int],
                                  max_cited: int = 3) -> str:
    """Deterministic, factually faithful explanation text for a segment.

    Cites up to ``max_cited`` annotated peaks as (timestamp, amplitude)
    pairs drawn from the candidate set and states the first inter-peak
    interval. Useful for demos and for self-consistency fixtures.
    """
    by_index = {e.index: e for e in rep.entries}
    cited = [by_index[int(g)] for g in gt_peaks if int(g) in by_index][:max_cited]
    lines = [f"Detected {len(gt_peaks)} target peaks among {len(rep.entries)} candidates."]
    for e in cited:
        lines.append(f"Candidate ({e.timestamp}, {e.amplitude:.6f}) is a dominant apex.")
    if len(gt_peaks) >= 2:
        scale = rep.ts_seconds_per_sample
        t0 = index_to_timestamp(int(gt_peaks[0]), scale)
        t1 = index_to_timestamp(int(gt_peaks[1]), scale)
        delta = _stamp_seconds(t1) - _stamp_seconds(t0)
        lines.append(f"The interval between {t0} and {t1} is {delta} seconds, "
                     "consistent with a regular rhythm.")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelEvent:
    ts: float
    record_id: str
    reviewer_id: str
    label: str

    def to_dict(self) -> dict:
        return {"ts": self.ts, "record_id": self.record_id,
                "reviewer_id": self.reviewer_id, "label": self.label}


@dataclass(frozen=True)
class AuditRecord:
    record_id: str
    segment_ref: str
    raw_output: str
    checks: RuleCheckReport
    label: str | None = None
    reviewer_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "segment_ref": self.segment_ref,
            "raw_output": self.raw_output,
            "checks": self.checks.to_dict(),
            "label": self.label,
            "reviewer_id": self.reviewer_id,
        }


@dataclass(frozen=True)
class AuditBundle:
    version: int
    records: tuple[AuditRecord, ...]
    label_log: tuple[LabelEvent, ...] = ()
    duplicates_dropped: int = 0

    @property
    def summary(self) -> dict:
        rejected = sum(1 for r in self.records if not r.checks.overall)
        label_counts = {name: 0 for name in LABELS}
        for r in self.records:
            if r.label is not None:
                label_counts[r.label] += 1
        return {
            "total": len(self.records),
            "passed": len(self.records) - rejected,
            "rejected": rejected,
            "duplicates_dropped": self.duplicates_dropped,
            "labeled": sum(label_counts.values()),
            "label_counts": label_counts,
        }

    def find(self, record_id: str) -> AuditRecord:
        for r in self.records:
            if r.record_id == record_id:
                return r
        raise UnknownRecord(f"no record {record_id!r} in bundle")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "records": [r.to_dict() for r in self.records],
            "label_log": [e.to_dict() for e in self.label_log],
            "summary": self.summary,
        }


def record_id_for(segment_ref: str, raw_output: str) -> str:
    digest = hashlib.sha256(f"{segment_ref}\n{raw_output}".encode("utf-8")).hexdigest()
    return digest[:16]


def build_audit_bundle(segments: Sequence[SignalSegment],
                       reps: Sequence[PeakRepresentation],
                       raw_outputs: Sequence[str],
                       amp_tol: float = 0.005,
                       ibi_tol_s: float | None = None) -> AuditBundle:
    """Bundle aligned (segment, representation, model output) triples.

    Record ids are content hashes, so identical triples collide; duplicates
    are dropped and counted in the summary. Raises AlignmentError on length
    or segment-reference mismatches.
    """
    if not (len(segments) == len(reps) == len(raw_outputs)):
        raise AlignmentError(
            f"got {len(segments)} segments, {len(reps)} representations, "
            f"{len(raw_outputs)} outputs")
    records: list[AuditRecord] = []
    seen: set[str] = set()
    duplicates = 0
    for seg, rep, raw in zip(segments, reps, raw_outputs):
        if rep.segment_ref != seg.segment_id:
            raise AlignmentError(
                f"representation of {rep.segment_ref!r} paired with segment "
                f"{seg.segment_id!r}")
        rid = record_id_for(seg.segment_id, raw)
        if rid in seen:
            duplicates += 1
            continue
        seen.add(rid)
        output = parse_with_expected(raw, seg.modality)
        checks = factual_consistency_check(output, rep, seg.gt_peaks, amp_tol, ibi_tol_s)
        records.append(AuditRecord(record_id=rid, segment_ref=seg.segment_id,
                                   raw_output=raw, checks=checks))
    return AuditBundle(version=1, records=tuple(records), duplicates_dropped=duplicates)


def parse_with_expected(raw_output: str, modality: Modality) -> ModelOutput:
    from .rewards import parse_model_output
    return parse_model_output(raw_output, EXPECTED_LABELS[Modality(modality)])


def record_label(bundle: AuditBundle, record_id: str, label: str, reviewer_id: str,
                 at: float | None = None) -> AuditBundle:
    """Append one label event and materialize it (last write wins).

    The full event history is retained so the summary can always be
    replayed from the log. Raises UnknownRecord / InvalidLabel.
    """
    if label not in LABELS:
        raise InvalidLabel(f"label must be one of {LABELS}, got {label!r}")
    target = bundle.find(record_id)
    event = LabelEvent(ts=time.time() if at is None else float(at),
                       record_id=record_id, reviewer_id=str(reviewer_id), label=label)
    records = tuple(
        replace(r, label=label, reviewer_id=event.reviewer_id)
        if r.record_id == target.record_id else r
        for r in bundle.records
    )
    return replace(bundle, records=records, label_log=bundle.label_log + (event,))


def replay_labels(bundle: AuditBundle, events: Sequence[LabelEvent]) -> AuditBundle:
    """Rebuild labels from an event log against a fresh bundle."""
    fresh = replace(
        bundle,
        records=tuple(replace(r, label=None, reviewer_id=None) for r in bundle.records),
        label_log=(),
    )
    for e in events:
        fresh = record_label(fresh, e.record_id, e.label, e.reviewer_id, at=e.ts)
    return fresh


# ---------------------------------------------------------------------------
# Bundle / log files
# ---------------------------------------------------------------------------

def write_bundle(path: str | Path, bundle: AuditBundle) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(bundle.to_dict(), fh, indent=2)
        fh.write("\n")


def read_bundle(path: str | Path) -> AuditBundle:
    with Path(path).open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    records = tuple(
        AuditRecord(
            record_id=r["record_id"],
            segment_ref=r["segment_ref"],
            raw_output=r["raw_output"],
            checks=RuleCheckReport(
                peak_list_matches_gt=r["checks"]["peak_list_matches_gt"],
                all_timestamps_in_candidates=r["checks"]["all_timestamps_in_candidates"],
                amplitudes_consistent=r["checks"]["amplitudes_consistent"],
                intervals_consistent=r["checks"]["intervals_consistent"],
                template_ok=r["checks"]["template_ok"],
            ),
            label=r.get("label"),
            reviewer_id=r.get("reviewer_id"),
        )
        for r in doc["records"]
    )
    log = tuple(LabelEvent(ts=e["ts"], record_id=e["record_id"],
                           reviewer_id=e["reviewer_id"], label=e["label"])
                for e in doc.get("label_log", ()))
    return AuditBundle(version=doc["version"], records=records, label_log=log,
                       duplicates_dropped=doc["summary"].get("duplicates_dropped", 0))


def append_label_line(path: str | Path, event: LabelEvent) -> None:
    with Path(path).open("a", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(event.to_dict()) + "\n")


def read_label_log(path: str | Path) -> list[LabelEvent]:
    events = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            events.append(LabelEvent(ts=doc["ts"], record_id=doc["record_id"],
                                     reviewer_id=doc["reviewer_id"], label=doc["label"]))
    return events
