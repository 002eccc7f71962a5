"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from peakkit.segments import Modality, SignalSegment, SynthSpec, synthesize_segment

HOME_MODALITY = {
    "pan_tompkins": Modality.ECG,
    "nabian": Modality.ECG,
    "elgendi": Modality.PPG,
    "bishop": Modality.PPG,
    "choi": Modality.BCG,
}


def make_segment(samples, fs: float = 100.0, *, segment_id: str = "seg",
                 subject_id: str = "subj", modality: Modality = Modality.SYNTH,
                 gt_peaks=(), preprocessed: bool = True) -> SignalSegment:
    return SignalSegment(
        segment_id=segment_id,
        subject_id=subject_id,
        modality=modality,
        fs=fs,
        samples=np.asarray(samples, dtype=np.float64),
        gt_peaks=tuple(int(i) for i in gt_peaks),
        preprocessed=preprocessed,
    )


def clean_family(modality: Modality, count: int = 50, *, fs: float = 100.0,
                 duration: int = 1000, seed0: int = 1000) -> list[SignalSegment]:
    """Noise-free fixtures in the resting rate band 0.96..1.04 s."""
    segs = []
    for i in range(count):
        ibi = 0.96 + 0.08 * (i / max(count - 1, 1))
        spec = SynthSpec(modality=modality, fs=fs, duration_samples=duration,
                         mean_ibi_s=ibi, ibi_jitter_frac=0.0, noise_sigma=0.0,
                         rng_seed=seed0 + i)
        segs.append(synthesize_segment(
            spec, segment_id=f"{modality.value.lower()}-{i:03d}",
            subject_id=f"subj{i % 4:02d}"))
    return segs


def varied_family(modality: Modality, count: int, *, fs: float = 100.0,
                  duration: int = 1000, jitter: float = 0.04,
                  noise: float = 0.0, seed0: int = 5000) -> list[SignalSegment]:
    """Jittered fixtures for representation / reconstruction properties."""
    segs = []
    for i in range(count):
        ibi = 0.8 + 0.5 * (i / max(count - 1, 1))
        spec = SynthSpec(modality=modality, fs=fs, duration_samples=duration,
                         mean_ibi_s=ibi, ibi_jitter_frac=jitter, noise_sigma=noise,
                         rng_seed=seed0 + i)
        segs.append(synthesize_segment(
            spec, segment_id=f"{modality.value.lower()}-v{i:03d}",
            subject_id=f"subj{i % 4:02d}"))
    return segs


@pytest.fixture(scope="session")
def clean_ecg_family():
    return clean_family(Modality.ECG)


@pytest.fixture(scope="session")
def clean_ppg_family():
    return clean_family(Modality.PPG)


@pytest.fixture(scope="session")
def clean_bcg_family():
    return clean_family(Modality.BCG)
