"""peakkit: cardiac peak detection toolkit.

Turns physiological waveforms (ECG, PPG, BCG and simulated variants) into a
timestamped candidate-peak text sequence and back, runs classical reference
detectors, scores detections under tolerance-matched precision/recall and
HR/HRV error metrics with Welch's t-test statistics, computes multi-objective
rewards for model-generated peak lists, and audits model explanations with
mechanical factual checks plus a human review workbench.
"""

__version__ = "0.1.0"

from .errors import PeakkitError
from .segments import (
    Modality,
    RecordFormat,
    SignalSegment,
    SynthSpec,
    load_segments,
    synthesize_segment,
    write_segments,
)
from .preprocess import FilterSpec, butterworth_bandpass, preprocess_segment, segment_windows, zscore
from .representation import (
    CandidatePeak,
    PeakRepresentation,
    Polarity,
    PolarityMode,
    extract_extrema,
    index_to_timestamp,
    local_extrema,
    parse_serialized,
    serialize_representation,
    timestamp_to_index,
)
from .reconstruct import (
    FidelityReport,
    distance_sensitivity_sweep,
    fidelity_metrics,
    prominent_peak_recall,
    segment_fidelity,
    spline_reconstruct,
)
from .detectors import Algorithm, DetectorConfig, bishop, choi, detect, elgendi, nabian, pan_tompkins
from .evaluation import (
    FoldAssignment,
    HrHrvErrors,
    MatchResult,
    SegmentScore,
    TolerancePolicy,
    ToleranceKind,
    WelchResult,
    aggregate_scores,
    cv_split,
    fixed_ms,
    heart_rate_bpm,
    hr_hrv,
    hr_hrv_errors,
    intervals_s,
    match_peaks,
    noise_sweep,
    prf,
    relative_ibi_pct,
    rmssd_ms,
    score_segment,
    sdnn_ms,
    welch_t_test,
)
from .rewards import (
    ModelOutput,
    RewardBreakdown,
    RewardWeights,
    complete_reward,
    detection_reward,
    format_model_output,
    format_reward,
    hr_consistency_reward,
    parse_model_output,
    reference_output,
    score_output,
    score_records,
    total_reward,
)
from .audit import (
    AuditBundle,
    AuditRecord,
    LabelEvent,
    RuleCheckReport,
    build_audit_bundle,
    factual_consistency_check,
    read_bundle,
    record_label,
    replay_labels,
    write_bundle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
