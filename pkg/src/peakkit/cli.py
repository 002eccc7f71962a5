"""Command-line entry point.

Every subcommand composes the library modules 1:1 over files: segments in,
artifacts out, plus a ``manifest.json`` recording the resolved config, the
sha256 of every input, and the sha256 of every written artifact, so a run
can be reproduced and verified byte for byte (no wall-clock fields are
hashed or stored).

Exit codes: 0 ok, 2 config error, 3 data error, 4 internal invariant
failure. Errors are emitted to stderr as one machine-readable JSON line.

Config file: a JSON object; unknown keys are rejected. Key tree and
defaults are in DEFAULT_CONFIG below; command-line flags override config
values, which override the defaults.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .audit import (
    EXPECTED_LABELS,
    build_audit_bundle,
    read_bundle,
    render_consistent_explanation,
    write_bundle,
)
from .detectors import Algorithm, DetectorConfig, detect
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    InvariantViolation,
    NoPeriodFound,
    PeakkitError,
    UnsupportedRate,
)
from .evaluation import (
    SCORE_CSV_HEADER,
    SegmentScore,
    TolerancePolicy,
    ToleranceKind,
    aggregate_scores,
    cv_split,
    noise_sweep,
    score_segment,
    welch_t_test,
    write_score_csv,
    write_stats_csv,
)
from .preprocess import FilterSpec, preprocess_segment, segment_windows
from .reconstruct import (
    SWEEP_CSV_HEADER,
    distance_sensitivity_sweep,
    segment_fidelity,
)
from .representation import PolarityMode, extract_extrema, serialize_representation
from .rewards import RewardWeights, reference_output, score_records
from .segments import (
    Modality,
    RecordFormat,
    SignalSegment,
    SynthSpec,
    load_segments,
    synthesize_segment,
    write_segments,
)
from .server import ReviewState, serve_forever

DEFAULT_CONFIG: dict = {
    "filter": {"order": 4, "low_hz": 0.6, "high_hz": 15.0, "zero_phase": True},
    "representation": {"min_distance": 0, "seconds_per_sample": 1, "polarity": "both"},
    "detectors": [],
    "tolerance": {"kind": "fixed_ms", "value": 30.0},
    "reward": {"weights": {"format": 0.1, "detection": 0.6,
                           "completeness": 0.15, "hr": 0.15},
               "tol_ms": 30.0},
    "noise": {"sigmas": [0.1, 0.2, 0.3, 0.4, 0.5]},
    "cv": {"k": 4, "seed": 0},
    "audit": {"amp_tol": 0.005, "ibi_tol_s": None},
    "serve": {"host": "127.0.0.1", "port": 8765, "static_dir": None},
    "synth": {"modality": "synth", "count": 10, "subjects": 4, "fs": 100.0,
              "duration_samples": 1000, "mean_ibi_s": 1.0, "ibi_jitter_frac": 0.0,
              "noise_sigma": 0.0, "amp_scale": 1.0, "width_scale": 1.0},
}

FIDELITY_CSV_HEADER = ("segment_id", "min_distance", "retention", "mae", "rmse",
                       "pearson", "recall")
NOISE_DETAIL_HEADER = ("sigma",) + SCORE_CSV_HEADER
NOISE_SUMMARY_HEADER = ("detector", "sigma", "n", "precision_mean", "recall_mean",
                        "f1_mean")


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _merge_config(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "detectors":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = _merge_config(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return _merge_config(DEFAULT_CONFIG, doc)


def _filter_spec(cfg: dict, args: argparse.Namespace) -> FilterSpec:
    section = cfg["filter"]
    try:
        return FilterSpec(
            order=int(_pick(args, "order", section["order"])),
            low_hz=float(_pick(args, "low_hz", section["low_hz"])),
            high_hz=float(_pick(args, "high_hz", section["high_hz"])),
            zero_phase=bool(section["zero_phase"]) and not getattr(args, "no_zero_phase", False),
        )
    except InvariantViolation as exc:
        raise ConfigError(str(exc)) from None


def _rep_params(cfg: dict, args: argparse.Namespace) -> tuple[int, PolarityMode, object]:
    section = cfg["representation"]
    min_distance = int(_pick(args, "min_distance", section["min_distance"]))
    polarity = str(_pick(args, "polarity", section["polarity"]))
    try:
        mode = PolarityMode(polarity.upper())
    except ValueError:
        raise ConfigError(f"polarity must be one of "
                          f"{[m.value.lower() for m in PolarityMode]}, got {polarity!r}") from None
    scale = _pick(args, "scale", section["seconds_per_sample"])
    return min_distance, mode, scale


def _tolerance(cfg: dict, args: argparse.Namespace) -> TolerancePolicy:
    spec = getattr(args, "tolerance", None)
    if spec is not None:
        return spec
    section = cfg["tolerance"]
    try:
        return TolerancePolicy(ToleranceKind(str(section["kind"]).upper()),
                               float(section["value"]))
    except (ValueError, InvariantViolation) as exc:
        raise ConfigError(f"bad tolerance config: {exc}") from None


def _reward_weights(cfg: dict) -> RewardWeights:
    w = cfg["reward"]["weights"]
    try:
        return RewardWeights(format=float(w["format"]), detection=float(w["detection"]),
                             completeness=float(w["completeness"]), hr=float(w["hr"]))
    except (KeyError, InvariantViolation) as exc:
        raise ConfigError(f"bad reward weights: {exc}") from None


def _pick(args: argparse.Namespace, name: str, fallback):
    value = getattr(args, name, None)
    return fallback if value is None else value


def _detector_configs(cfg: dict, algo_flag: str | None) -> list[DetectorConfig]:
    """Resolve which detectors run: --algo wins, else config list, else all."""
    configured: dict[str, DetectorConfig] = {}
    for entry in cfg["detectors"]:
        if not isinstance(entry, dict) or "algorithm" not in entry:
            raise ConfigError("each detectors[] entry needs an 'algorithm' key")
        extra = set(entry) - {"algorithm", "params", "refractory_s"}
        if extra:
            raise ConfigError(f"unknown detector config keys {sorted(extra)}")
        try:
            algo = Algorithm(entry["algorithm"])
        except ValueError:
            raise ConfigError(f"unknown algorithm {entry['algorithm']!r}") from None
        configured[algo.value] = DetectorConfig(
            algorithm=algo,
            params=dict(entry.get("params", {})),
            refractory_s=float(entry.get("refractory_s", 0.25)))
    if algo_flag is None:
        names = list(configured) or [a.value for a in Algorithm]
    elif algo_flag == "all":
        names = [a.value for a in Algorithm]
    else:
        try:
            names = [Algorithm(algo_flag).value]
        except ValueError:
            raise ConfigError(f"unknown algorithm {algo_flag!r}") from None
    out = []
    for name in names:
        out.append(configured.get(name, DetectorConfig(algorithm=Algorithm(name))))
    return out


# ---------------------------------------------------------------------------
# Manifest + io helpers
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, subcommand: str, config_snapshot: dict,
                    inputs: dict[str, Path], outputs: dict[str, Path]) -> None:
    manifest = {
        "tool": "peakkit",
        "version": __version__,
        "subcommand": subcommand,
        "config": config_snapshot,
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
        "outputs": {name: _sha256(p) for name, p in sorted(outputs.items())},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out is None:
        raise ConfigError("--out <dir> is required for this subcommand")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_records(path: str) -> list[SignalSegment]:
    return load_segments(path, RecordFormat.RECORDS)


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    p = Path(path)
    if not p.is_file():
        raise DataError(f"input file not found: {path}")
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON: {exc}") from None
            if not isinstance(doc, dict):
                raise DataError(f"{path}:{lineno}: each line must be a JSON object")
            rows.append(doc)
    return rows


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_csv_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    import csv

    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    return repr(float(value))


def _parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _safe_name(segment_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in segment_id)


# ---------------------------------------------------------------------------
# Subcommands: each returns (inputs, outputs) path maps for the manifest
# ---------------------------------------------------------------------------

def cmd_synth(args, cfg, out_dir):
    section = cfg["synth"]
    name = str(_pick(args, "modality", section["modality"])).upper()
    try:
        modality = Modality(name)
    except ValueError:
        raise ConfigError(f"unknown modality {name!r}; choose from "
                          f"{[m.value for m in Modality]}") from None
    count = int(_pick(args, "count", section["count"]))
    subjects = int(_pick(args, "subjects", section["subjects"]))
    if count < 1 or subjects < 1:
        raise ConfigError("count and subjects must be >= 1")
    base_seed = int(args.seed)
    segments = []
    for i in range(count):
        spec = SynthSpec(
            modality=modality,
            fs=float(_pick(args, "fs", section["fs"])),
            duration_samples=int(_pick(args, "duration", section["duration_samples"])),
            mean_ibi_s=float(_pick(args, "mean_ibi", section["mean_ibi_s"])),
            ibi_jitter_frac=float(_pick(args, "jitter", section["ibi_jitter_frac"])),
            noise_sigma=float(_pick(args, "noise", section["noise_sigma"])),
            amp_scale=float(_pick(args, "amp_scale", section["amp_scale"])),
            width_scale=float(_pick(args, "width_scale", section["width_scale"])),
            rng_seed=base_seed + i,
        )
        segments.append(synthesize_segment(
            spec, subject_id=f"subj{i % min(subjects, count):03d}"))
    out = out_dir / "segments.jsonl"
    write_segments(out, segments)
    return {}, {"segments.jsonl": out}


def cmd_preprocess(args, cfg, out_dir):
    spec = _filter_spec(cfg, args)
    segments = _load_records(args.segments)
    window_len = args.window_len
    if window_len is not None:
        windowed = []
        for seg in segments:
            windowed.extend(segment_windows(
                seg.samples, seg.fs, int(window_len),
                segment_id_prefix=f"{seg.segment_id}-w", subject_id=seg.subject_id,
                modality=seg.modality, gt_peaks=seg.gt_peaks))
        segments = windowed
    processed = _parallel_map(lambda s: preprocess_segment(s, spec), segments, args.jobs)
    out = out_dir / "preprocessed.jsonl"
    write_segments(out, processed)
    return {"segments": Path(args.segments)}, {"preprocessed.jsonl": out}


def cmd_represent(args, cfg, out_dir):
    min_distance, mode, scale = _rep_params(cfg, args)
    segments = _load_records(args.segments)
    reps_dir = out_dir / "reps"
    reps_dir.mkdir(exist_ok=True)
    outputs: dict[str, Path] = {}
    index = {}
    used: set[str] = set()
    for seg in segments:
        rep = extract_extrema(seg, min_distance, mode, scale)
        name = _safe_name(seg.segment_id)
        stem, n = name, 2
        while stem in used:
            stem, n = f"{name}~{n}", n + 1
        used.add(stem)
        rel = f"reps/{stem}.txt"
        path = out_dir / rel
        path.write_text(serialize_representation(rep), encoding="utf-8", newline="\n")
        outputs[rel] = path
        index[seg.segment_id] = {
            "file": rel,
            "entries": len(rep.entries),
            "retention": len(rep.entries) / seg.samples.size,
        }
    index_path = out_dir / "index.json"
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
    outputs["index.json"] = index_path
    return {"segments": Path(args.segments)}, outputs


def cmd_reconstruct(args, cfg, out_dir):
    min_distance, mode, _ = _rep_params(cfg, args)
    tol = int(args.recall_tol)
    segments = _load_records(args.segments)
    reports = _parallel_map(
        lambda s: segment_fidelity(s, min_distance, mode, tol), segments, args.jobs)
    rows = [
        (seg.segment_id, min_distance, _fmt(rep.retention), _fmt(rep.mae),
         _fmt(rep.rmse), _fmt(rep.pearson_r), _fmt(rep.prominent_recall))
        for seg, rep in zip(segments, reports)
    ]
    out = out_dir / "fidelity.csv"
    _write_csv_rows(out, FIDELITY_CSV_HEADER, rows)
    return {"segments": Path(args.segments)}, {"fidelity.csv": out}


def cmd_sweep_distance(args, cfg, out_dir):
    _, mode, _ = _rep_params(cfg, args)
    distances = args.distances
    tol = int(args.recall_tol)
    segments = _load_records(args.segments)
    sweeps = _parallel_map(
        lambda s: distance_sensitivity_sweep(s, distances, mode, tol),
        segments, args.jobs)

    detail_rows = []
    for seg, sweep in zip(segments, sweeps):
        for d, rep in sweep:
            detail_rows.append((seg.segment_id, d, _fmt(rep.retention), _fmt(rep.mae),
                                _fmt(rep.rmse), _fmt(rep.pearson_r),
                                _fmt(rep.prominent_recall)))
    detail = out_dir / "sweep_detail.csv"
    _write_csv_rows(detail, ("segment_id",) + SWEEP_CSV_HEADER, detail_rows)

    summary_rows = []
    for col, d in enumerate(distances):
        reports = [sweep[col][1] for sweep in sweeps]
        summary_rows.append((
            d,
            _fmt(np.mean([r.retention for r in reports])),
            _fmt(np.mean([r.mae for r in reports])),
            _fmt(np.mean([r.rmse for r in reports])),
            _fmt(np.mean([r.pearson_r for r in reports])),
            _fmt(np.mean([r.prominent_recall for r in reports])),
        ))
    summary = out_dir / "sweep.csv"
    _write_csv_rows(summary, SWEEP_CSV_HEADER, summary_rows)
    return {"segments": Path(args.segments)}, {"sweep.csv": summary,
                                               "sweep_detail.csv": detail}


def _run_detector(seg: SignalSegment, dcfg: DetectorConfig) -> dict:
    row = {"segment_id": seg.segment_id, "detector": dcfg.algorithm.value}
    try:
        row["pred_peaks"] = [int(i) for i in detect(seg, dcfg)]
    except (NoPeriodFound, UnsupportedRate) as exc:
        row["pred_peaks"] = []
        row["note"] = type(exc).__name__
    return row


def cmd_detect(args, cfg, out_dir):
    configs = _detector_configs(cfg, args.algo)
    policy = _tolerance(cfg, args)
    segments = _load_records(args.segments)
    tasks = [(seg, dcfg) for dcfg in configs for seg in segments]
    rows = _parallel_map(lambda t: _run_detector(*t), tasks, args.jobs)

    pred_path = out_dir / "predictions.jsonl"
    _write_jsonl(pred_path, rows)
    outputs = {"predictions.jsonl": pred_path}

    by_seg = {seg.segment_id: seg for seg in segments}
    for dcfg in configs:
        name = dcfg.algorithm.value
        scores = [
            score_segment(r["segment_id"], name, r["pred_peaks"],
                          by_seg[r["segment_id"]].gt_peaks,
                          by_seg[r["segment_id"]].fs, policy)
            for r in rows if r["detector"] == name
        ]
        rel = f"scores_{name}.csv"
        write_score_csv(out_dir / rel, scores)
        outputs[rel] = out_dir / rel
    return {"segments": Path(args.segments)}, outputs


def cmd_score(args, cfg, out_dir):
    policy = _tolerance(cfg, args)
    segments = {seg.segment_id: seg for seg in _load_records(args.segments)}
    preds = _read_jsonl(args.pred)
    scores = []
    for lineno, row in enumerate(preds, start=1):
        try:
            seg = segments[row["segment_id"]]
            pred_peaks = row["pred_peaks"]
            detector = row.get("detector", "detector")
        except KeyError as exc:
            raise DataError(f"{args.pred}:{lineno}: missing {exc}") from None
        scores.append(score_segment(seg.segment_id, detector, pred_peaks,
                                    seg.gt_peaks, seg.fs, policy))
    csv_path = out_dir / "scores.csv"
    write_score_csv(csv_path, scores)
    detectors = sorted({s.detector for s in scores})
    agg = {d: aggregate_scores([s for s in scores if s.detector == d])
           for d in detectors}
    agg_path = out_dir / "aggregate.json"
    agg_path.write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    return ({"segments": Path(args.segments), "pred": Path(args.pred)},
            {"scores.csv": csv_path, "aggregate.json": agg_path})


def _read_metric_column(path: str, metric: str) -> list[float]:
    import csv

    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or metric not in reader.fieldnames:
            raise DataError(f"{path}: no column {metric!r}")
        return [float(row[metric]) for row in reader if row[metric] not in ("", None)]


def cmd_stats(args, cfg, out_dir):
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise ConfigError("--metrics must name at least one column")
    rows = []
    for metric in metrics:
        a = _read_metric_column(args.a, metric)
        b = _read_metric_column(args.b, metric)
        rows.append((metric, welch_t_test(a, b)))
    out = out_dir / "stats.csv"
    write_stats_csv(out, rows)
    return {"a": Path(args.a), "b": Path(args.b)}, {"stats.csv": out}


def cmd_noise_sweep(args, cfg, out_dir):
    configs = _detector_configs(cfg, args.algo)
    if len(configs) != 1:
        raise ConfigError("noise-sweep runs one detector; pass --algo <name>")
    dcfg = configs[0]
    policy = _tolerance(cfg, args)
    sigmas = args.sigmas if args.sigmas is not None else [
        float(s) for s in cfg["noise"]["sigmas"]]
    segments = _load_records(args.segments)
    seed = int(args.seed)

    def one(seg: SignalSegment):
        return noise_sweep(seg, lambda s: detect(s, dcfg), sigmas, seed=seed,
                           policy=policy, detector_name=dcfg.algorithm.value)

    all_rows = _parallel_map(one, segments, args.jobs)

    detail_rows = []
    for seg_rows in all_rows:
        for sigma, s in seg_rows:
            detail_rows.append((
                _fmt(sigma), s.segment_id, s.detector, s.policy,
                _fmt(s.precision), _fmt(s.recall), _fmt(s.f1),
                "" if s.hr_mae is None else _fmt(s.hr_mae),
                "" if s.hr_mape is None else _fmt(s.hr_mape),
                "" if s.hrv_mae is None else _fmt(s.hrv_mae),
                "" if s.hrv_mape is None else _fmt(s.hrv_mape),
                ";".join(s.excluded),
            ))
    detail = out_dir / "noise_sweep_detail.csv"
    _write_csv_rows(detail, NOISE_DETAIL_HEADER, detail_rows)

    summary_rows = []
    for col, sigma in enumerate([0.0] + list(sigmas)):
        scores = [seg_rows[col][1] for seg_rows in all_rows]
        summary_rows.append((
            dcfg.algorithm.value, _fmt(sigma), len(scores),
            _fmt(np.mean([s.precision for s in scores])),
            _fmt(np.mean([s.recall for s in scores])),
            _fmt(np.mean([s.f1 for s in scores])),
        ))
    summary = out_dir / "noise_sweep.csv"
    _write_csv_rows(summary, NOISE_SUMMARY_HEADER, summary_rows)
    return {"segments": Path(args.segments)}, {"noise_sweep.csv": summary,
                                               "noise_sweep_detail.csv": detail}


def cmd_cv_split(args, cfg, out_dir):
    k = int(_pick(args, "k", cfg["cv"]["k"]))
    seed = int(args.seed) if args.seed_given else int(cfg["cv"]["seed"])
    segments = _load_records(args.segments)
    assignment = cv_split([seg.subject_id for seg in segments], k=k, seed=seed)
    doc = {"k": assignment.k, "seed": assignment.seed,
           "folds": dict(sorted(assignment.mapping.items()))}
    out = out_dir / "folds.json"
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"segments": Path(args.segments)}, {"folds.json": out}


def cmd_reward(args, cfg, out_dir):
    weights = _reward_weights(cfg)
    _, _, scale = _rep_params(cfg, args)
    records = _read_jsonl(args.outputs)
    by_seg: dict[str, SignalSegment] = {}
    if args.segments is not None:
        by_seg = {seg.segment_id: seg for seg in _load_records(args.segments)}
    for lineno, rec in enumerate(records, start=1):
        if "segment_id" not in rec or "raw_output" not in rec:
            raise DataError(f"{args.outputs}:{lineno}: records need "
                            "segment_id and raw_output")
        seg = by_seg.get(rec["segment_id"])
        if seg is not None:
            rec.setdefault("fs", seg.fs)
            rec.setdefault("gt_peaks", [int(g) for g in seg.gt_peaks])
            rec.setdefault("expected_label", EXPECTED_LABELS[seg.modality])
        if "fs" not in rec or "gt_peaks" not in rec:
            raise DataError(f"{args.outputs}:{lineno}: records need fs and gt_peaks "
                            "(give --segments to join them in)")
        rec.setdefault("seconds_per_sample", scale if isinstance(scale, (int, float))
                       else str(scale))
    scored = score_records(records)
    for row in scored:
        row.update({"w_format": weights.format, "w_detection": weights.detection,
                    "w_completeness": weights.completeness, "w_hr": weights.hr})
    out = out_dir / "rewards.jsonl"
    _write_jsonl(out, scored)
    inputs = {"outputs": Path(args.outputs)}
    if args.segments is not None:
        inputs["segments"] = Path(args.segments)
    return inputs, {"rewards.jsonl": out}


def _faithful_output(seg: SignalSegment, rep) -> str:
    text = reference_output(seg.gt_peaks, rep.ts_seconds_per_sample,
                            label=EXPECTED_LABELS[seg.modality])
    explanation = render_consistent_explanation(rep, seg.gt_peaks)
    return f"{text} Explanation: {explanation}"


def cmd_audit_build(args, cfg, out_dir):
    min_distance, mode, scale = _rep_params(cfg, args)
    amp_tol = float(cfg["audit"]["amp_tol"])
    ibi_tol = cfg["audit"]["ibi_tol_s"]
    segments = _load_records(args.segments)
    reps = [extract_extrema(seg, min_distance, mode, scale) for seg in segments]
    inputs = {"segments": Path(args.segments)}
    if args.faithful:
        raws = [_faithful_output(seg, rep) for seg, rep in zip(segments, reps)]
    else:
        if args.outputs is None:
            raise ConfigError("audit-build needs --outputs <jsonl> or --faithful")
        rows = _read_jsonl(args.outputs)
        by_seg: dict[str, str] = {}
        for lineno, row in enumerate(rows, start=1):
            if "segment_id" not in row or "raw_output" not in row:
                raise DataError(f"{args.outputs}:{lineno}: records need "
                                "segment_id and raw_output")
            by_seg.setdefault(str(row["segment_id"]), str(row["raw_output"]))
        missing = [seg.segment_id for seg in segments if seg.segment_id not in by_seg]
        if missing:
            raise AlignmentError(f"no model output for segments {missing[:5]}")
        raws = [by_seg[seg.segment_id] for seg in segments]
        inputs["outputs"] = Path(args.outputs)
    bundle = build_audit_bundle(segments, reps, raws, amp_tol=amp_tol,
                                ibi_tol_s=None if ibi_tol is None else float(ibi_tol))
    out = out_dir / "bundle.json"
    write_bundle(out, bundle)
    return inputs, {"bundle.json": out}


def cmd_audit_check(args, cfg, out_dir):
    bundle = read_bundle(args.bundle)
    failures = []
    for record in bundle.records:
        checks = record.checks.to_dict()
        failed = sorted(name for name, ok in checks.items()
                        if name != "overall" and not ok)
        if failed:
            failures.append({"record_id": record.record_id,
                             "segment_ref": record.segment_ref,
                             "failed_checks": failed})
    doc = {"summary": bundle.summary, "failures": failures}
    out = out_dir / "audit_summary.json"
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    s = bundle.summary
    print(f"records={s['total']} passed={s['passed']} rejected={s['rejected']}")
    return {"bundle": Path(args.bundle)}, {"audit_summary.json": out}


def cmd_serve(args, cfg, out_dir):
    min_distance, _, scale = _rep_params(cfg, args)
    section = cfg["serve"]
    host = str(_pick(args, "host", section["host"]))
    port = int(_pick(args, "port", section["port"]))
    static_dir = _pick(args, "static", section["static_dir"])
    bundle = read_bundle(args.bundle)
    segments = {seg.segment_id: seg for seg in _load_records(args.segments)}
    label_log = Path(args.label_log) if args.label_log else out_dir / "labels.jsonl"
    state = ReviewState.load(bundle, segments, label_log,
                             seconds_per_sample=scale, min_distance=min_distance,
                             static_dir=static_dir)
    _write_manifest(out_dir, "serve", _config_snapshot(cfg, args),
                    {"bundle": Path(args.bundle), "segments": Path(args.segments)}, {})
    serve_forever(state, host=host, port=port)
    return None  # manifest already written; serve_forever blocks until shutdown


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that reports errors as machine-readable JSON on stderr."""

    def error(self, message: str):
        sys.stderr.write(json.dumps(
            {"error": "ArgumentError", "message": message, "exit_code": 2}) + "\n")
        raise SystemExit(2)


def _csv_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _csv_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _tolerance_flag(text: str) -> TolerancePolicy:
    kind, _, value = text.partition(":")
    mapping = {"fixed": ToleranceKind.FIXED_MS, "fixed_ms": ToleranceKind.FIXED_MS,
               "relative": ToleranceKind.RELATIVE_IBI_PCT,
               "relative_ibi_pct": ToleranceKind.RELATIVE_IBI_PCT}
    if kind not in mapping:
        raise argparse.ArgumentTypeError(
            f"tolerance must look like fixed:30 or relative:5, got {text!r}")
    try:
        return TolerancePolicy(mapping[kind], float(value) if value else
                               (30.0 if mapping[kind] is ToleranceKind.FIXED_MS else 5.0))
    except (ValueError, InvariantViolation) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="JSON config file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sub.add_argument("--seed", type=int, default=0, help="base RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peakkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version",
                        version=f"peakkit {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True,
                                 parser_class=_Parser)

    p = subs.add_parser("synth", help="generate synthetic annotated segments")
    _add_common(p)
    p.add_argument("--modality", default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--subjects", type=int, default=None)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--duration", type=int, default=None, help="samples per segment")
    p.add_argument("--mean-ibi", dest="mean_ibi", type=float, default=None)
    p.add_argument("--jitter", type=float, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--amp-scale", dest="amp_scale", type=float, default=None)
    p.add_argument("--width-scale", dest="width_scale", type=float, default=None)
    p.set_defaults(fn=cmd_synth)

    p = subs.add_parser("preprocess", help="bandpass + z-score segments")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--low-hz", dest="low_hz", type=float, default=None)
    p.add_argument("--high-hz", dest="high_hz", type=float, default=None)
    p.add_argument("--no-zero-phase", dest="no_zero_phase", action="store_true")
    p.add_argument("--window-len", dest="window_len", type=int, default=None,
                   help="split raw inputs into non-overlapping windows first")
    p.set_defaults(fn=cmd_preprocess)

    p = subs.add_parser("represent", help="serialize candidate-peak sequences")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--min-distance", dest="min_distance", type=int, default=None)
    p.add_argument("--polarity", choices=[m.value.lower() for m in PolarityMode], default=None)
    p.add_argument("--scale", default=None, help="timestamp seconds per sample")
    p.set_defaults(fn=cmd_represent)

    p = subs.add_parser("reconstruct", help="spline fidelity of representations")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--min-distance", dest="min_distance", type=int, default=None)
    p.add_argument("--polarity", choices=[m.value.lower() for m in PolarityMode], default=None)
    p.add_argument("--recall-tol", dest="recall_tol", type=int, default=1)
    p.set_defaults(fn=cmd_reconstruct)

    p = subs.add_parser("sweep-distance", help="fidelity vs pruning distance")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--distances", type=_csv_ints, default=[0, 2, 5, 10])
    p.add_argument("--polarity", choices=[m.value.lower() for m in PolarityMode], default=None)
    p.add_argument("--recall-tol", dest="recall_tol", type=int, default=1)
    p.set_defaults(fn=cmd_sweep_distance)

    p = subs.add_parser("detect", help="run classical detectors")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--algo", default=None,
                   help="algorithm name or 'all' (default: config list, else all)")
    p.add_argument("--tolerance", type=_tolerance_flag, default=None)
    p.set_defaults(fn=cmd_detect)

    p = subs.add_parser("score", help="score stored predictions against annotations")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--pred", required=True, help="predictions.jsonl from detect")
    p.add_argument("--tolerance", type=_tolerance_flag, default=None)
    p.set_defaults(fn=cmd_score)

    p = subs.add_parser("stats", help="Welch's t-test between two score files")
    _add_common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metrics", default="f1")
    p.set_defaults(fn=cmd_stats)

    p = subs.add_parser("noise-sweep", help="detector robustness vs additive noise")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--algo", required=True)
    p.add_argument("--sigmas", type=_csv_floats, default=None)
    p.add_argument("--tolerance", type=_tolerance_flag, default=None)
    p.set_defaults(fn=cmd_noise_sweep)

    p = subs.add_parser("cv-split", help="subject-independent folds")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_cv_split)

    p = subs.add_parser("reward", help="score model outputs with the reward engine")
    _add_common(p)
    p.add_argument("--outputs", required=True,
                   help="JSONL of {segment_id, raw_output, fs, gt_peaks}")
    p.add_argument("--segments", default=None,
                   help="optional records file to join fs/gt_peaks from")
    p.set_defaults(fn=cmd_reward)

    p = subs.add_parser("audit-build", help="bundle outputs with rule-check verdicts")
    _add_common(p)
    p.add_argument("--segments", required=True)
    p.add_argument("--outputs", default=None,
                   help="JSONL of {segment_id, raw_output}")
    p.add_argument("--faithful", action="store_true",
                   help="audit ideal annotation-derived outputs instead")
    p.add_argument("--min-distance", dest="min_distance", type=int, default=None)
    p.add_argument("--polarity", choices=[m.value.lower() for m in PolarityMode], default=None)
    p.add_argument("--scale", default=None)
    p.set_defaults(fn=cmd_audit_build)

    p = subs.add_parser("audit-check", help="summarize rule-check verdicts in a bundle")
    _add_common(p)
    p.add_argument("--bundle", required=True)
    p.set_defaults(fn=cmd_audit_check)

    p = subs.add_parser("serve", help="serve the review workbench")
    _add_common(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static", default=None, help="static asset directory")
    p.add_argument("--label-log", dest="label_log", default=None)
    p.add_argument("--min-distance", dest="min_distance", type=int, default=None,
                   help="match the distance the bundle was built at")
    p.add_argument("--scale", default=None)
    p.set_defaults(fn=cmd_serve)

    return parser


def _config_snapshot(cfg: dict, args: argparse.Namespace) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items())
             if k not in ("fn", "config") and v is not None
             and not isinstance(v, (TolerancePolicy,))}
    flags.pop("seed_given", None)
    snapshot = {"resolved": cfg, "flags": flags}
    tol = getattr(args, "tolerance", None)
    if tol is not None:
        snapshot["flags"]["tolerance"] = tol.label
    return snapshot


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    raw_argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(raw_argv)
    args.seed_given = "--seed" in raw_argv
    cfg = load_config(args.config)
    out_dir = _out_dir(args)
    result = args.fn(args, cfg, out_dir)
    if result is not None:
        inputs, outputs = result
        _write_manifest(out_dir, args.subcommand, _config_snapshot(cfg, args),
                        inputs, outputs)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except SystemExit:
        raise
    except ConfigError as exc:
        return _fail(2, exc)
    except InvariantViolation as exc:
        return _fail(4, exc)
    except (PeakkitError, FileNotFoundError, IsADirectoryError, OSError,
            KeyError, ValueError) as exc:
        return _fail(3, exc)
    except Exception as exc:  # pragma: no cover - last resort
        return _fail(4, exc)


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
