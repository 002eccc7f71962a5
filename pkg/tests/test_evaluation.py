"""Scoring protocol: matching, rate metrics, folds, Welch test, noise sweep."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from oracle_matching import max_matching_augmenting, tolerance_adjacency
from oracle_tcdf import two_tailed_p

from peakkit.detectors import pan_tompkins
from peakkit.errors import (
    DegenerateSample,
    GroundTruthDegenerate,
    InsufficientPeaks,
    InvariantViolation,
    NotSorted,
    TooFewSubjects,
)
from peakkit.evaluation import (
    FoldAssignment,
    MatchResult,
    SCORE_CSV_HEADER,
    STATS_CSV_HEADER,
    TolerancePolicy,
    aggregate_scores,
    cv_split,
    fixed_ms,
    gt_tolerances_s,
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
    write_score_csv,
    write_stats_csv,
)
from peakkit.preprocess import preprocess_segment
from peakkit.segments import Modality

from conftest import clean_family


def random_instance(rng):
    """Physiological peak-train pair plus a tolerance policy."""
    fs = 100.0
    n_gt = int(rng.integers(2, 13))
    gt = np.cumsum(rng.uniform(0.5, 1.5, n_gt)) * fs
    gt = np.unique(gt.astype(np.int64))
    pred = []
    for g in gt:
        r = rng.random()
        if r < 0.75:
            pred.append(int(g + rng.integers(-4, 5)))
        elif r < 0.90:
            pred.append(int(g - 2))
            pred.append(int(g + 2))
    for _ in range(int(rng.integers(0, 4))):
        pred.append(int(rng.integers(0, int(gt[-1]) + 100)))
    pred = np.unique(np.asarray(pred, dtype=np.int64))
    if rng.random() < 0.5:
        policy = fixed_ms(float(rng.uniform(10, 50)))
    else:
        policy = relative_ibi_pct(float(rng.uniform(2, 10)))
    return pred, gt, fs, policy


class TestTolerancePolicy:
    def test_defaults(self):
        assert fixed_ms().value == 30.0
        assert relative_ibi_pct().value == 5.0

    def test_nonpositive_value_rejected(self):
        with pytest.raises(InvariantViolation):
            fixed_ms(0.0)
        with pytest.raises(InvariantViolation):
            relative_ibi_pct(-1.0)

    def test_relative_crossover_at_600ms_ibi(self):
        # 5% of the local IBI crosses 30 ms exactly at IBI = 0.6 s.
        fs = 1000.0
        fast = np.array([0, 500, 1000], dtype=np.int64)    # IBI 0.5 s
        slow = np.array([0, 700, 1400], dtype=np.int64)    # IBI 0.7 s
        rel, fix = relative_ibi_pct(5.0), fixed_ms(30.0)
        assert np.all(gt_tolerances_s(fast, fs, rel) < gt_tolerances_s(fast, fs, fix))
        assert np.all(gt_tolerances_s(slow, fs, rel) > gt_tolerances_s(slow, fs, fix))

    def test_relative_singleton_uses_one_second_fallback(self):
        tol = gt_tolerances_s(np.array([500]), 100.0, relative_ibi_pct(5.0))
        assert tol.tolist() == [0.05]

    def test_relative_first_peak_uses_next_interval(self):
        tol = gt_tolerances_s(np.array([0, 50, 150]), 100.0, relative_ibi_pct(10.0))
        assert tol == pytest.approx([0.05, 0.05, 0.10])


class TestMatching:
    def test_two_sample_offset_inside_fixed_tolerance(self):
        m = match_peaks([102], [100], 100.0, fixed_ms(30.0))
        assert (m.tp, m.fp, m.fn) == (1, 0, 0)
        assert m.pairs[0] == (102, 100, pytest.approx(0.02))

    def test_empty_pred_counts_misses(self):
        m = match_peaks([], [100], 100.0)
        assert (m.tp, m.fp, m.fn) == (0, 0, 1)
        assert prf(m) == (0.0, 0.0, 0.0)

    def test_equidistant_tie_takes_smaller_pred_index(self):
        m = match_peaks([99, 101], [100], 100.0, fixed_ms(30.0))
        assert (m.tp, m.fp, m.fn) == (1, 1, 0)
        assert m.pairs[0][0] == 99

    def test_one_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            pred, gt, fs, policy = random_instance(rng)
            m = match_peaks(pred, gt, fs, policy)
            assert len({p for p, _, _ in m.pairs}) == m.tp
            assert len({g for _, g, _ in m.pairs}) == m.tp
            assert m.fp == len(pred) - m.tp
            assert m.fn == len(gt) - m.tp

    def test_every_pair_within_its_tolerance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            pred, gt, fs, policy = random_instance(rng)
            m = match_peaks(pred, gt, fs, policy)
            tol = gt_tolerances_s(gt, fs, policy)
            gt_pos = {int(g): k for k, g in enumerate(gt)}
            for p, g, delta in m.pairs:
                assert abs(delta) <= tol[gt_pos[g]] + 1e-12
                assert delta == pytest.approx((p - g) / fs)

    def test_greedy_equals_exhaustive_maximum(self):
        rng = np.random.default_rng(42)
        for _ in range(250):
            pred, gt, fs, policy = random_instance(rng)
            m = match_peaks(pred, gt, fs, policy)
            adjacency = tolerance_adjacency(pred, gt, fs, gt_tolerances_s(gt, fs, policy))
            assert m.tp == max_matching_augmenting(adjacency, len(gt))

    def test_unsorted_inputs_rejected(self):
        with pytest.raises(NotSorted):
            match_peaks([5, 3], [10], 100.0)
        with pytest.raises(NotSorted):
            match_peaks([3], [10, 10], 100.0)


class TestPrf:
    def test_hand_arithmetic(self):
        m = MatchResult(pairs=(), tp=9, fp=1, fn=1, tolerance_used_s=())
        assert prf(m) == (0.9, 0.9, pytest.approx(0.9))

    def test_empty_convention(self):
        m = MatchResult(pairs=(), tp=0, fp=0, fn=0, tolerance_used_s=())
        assert prf(m) == (0.0, 0.0, 0.0)

    def test_perfect(self):
        m = MatchResult(pairs=(), tp=7, fp=0, fn=0, tolerance_used_s=())
        assert prf(m) == (1.0, 1.0, 1.0)

    def test_f1_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            tp, fp, fn = (int(x) for x in rng.integers(0, 20, 3))
            p, r, f1 = prf(MatchResult((), tp, fp, fn, ()))
            expect = 2 * p * r / (p + r) if p + r > 0 else 0.0
            assert f1 == pytest.approx(expect)


class TestRateMetrics:
    def test_intervals(self):
        assert intervals_s([0, 100, 200], 100.0).tolist() == [1.0, 1.0]
        assert intervals_s([0, 97], 100.0).tolist() == [0.97]
        assert intervals_s([], 100.0).size == 0
        assert intervals_s([42], 100.0).size == 0

    def test_constant_rate(self):
        hr, hrv = hr_hrv([0, 100, 200, 300], 100.0)
        assert hr == pytest.approx(60.0)
        assert hrv == pytest.approx(0.0)

    def test_sixty_two_bpm_regime(self):
        assert heart_rate_bpm([0.97] * 10) == pytest.approx(60.0 / 0.97)

    def test_sdnn_hand_value(self):
        hr = heart_rate_bpm([0.9, 1.1])
        assert hr == pytest.approx(60.0)
        assert sdnn_ms([0.9, 1.1]) == pytest.approx(141.42, abs=0.01)

    def test_rmssd_differs_from_sdnn(self):
        ibis = [0.9, 1.1, 0.9, 1.1]
        assert rmssd_ms(ibis) == pytest.approx(200.0)
        assert sdnn_ms(ibis) == pytest.approx(115.47, abs=0.01)

    def test_insufficient_peaks(self):
        with pytest.raises(InsufficientPeaks):
            heart_rate_bpm([])
        with pytest.raises(InsufficientPeaks):
            sdnn_ms([1.0])
        with pytest.raises(InsufficientPeaks):
            rmssd_ms([1.0])

    def test_unknown_hrv_method(self):
        with pytest.raises(InvariantViolation):
            hr_hrv([0, 100, 200], 100.0, hrv_method="median")


class TestHrHrvErrors:
    def test_identical_lists_score_zero(self):
        peaks = [0, 95, 200, 298, 400]
        e = hr_hrv_errors(peaks, peaks, 100.0)
        assert e.hr_mae_bpm == pytest.approx(0.0)
        assert e.hrv_mae_ms == pytest.approx(0.0)
        assert e.excluded == ()

    def test_five_percent_fast(self):
        # gt IBI 1.0 s, pred IBI 20/21 s: 63 vs 60 bpm.
        e = hr_hrv_errors([0, 20, 40, 60], [0, 21, 42, 63], 21.0)
        assert e.hr_mae_bpm == pytest.approx(3.0)
        assert e.hr_mape_pct == pytest.approx(5.0)

    def test_single_pred_peak_excluded_not_scored(self):
        e = hr_hrv_errors([100], [0, 100, 200], 100.0)
        assert e.hr_mae_bpm is None and e.hrv_mae_ms is None
        assert e.excluded == ("hr", "hrv")

    def test_two_pred_peaks_score_hr_only(self):
        e = hr_hrv_errors([0, 100], [0, 100, 200, 300], 100.0)
        assert e.hr_mae_bpm == pytest.approx(0.0)
        assert e.hrv_mae_ms is None
        assert "hrv" in e.excluded

    def test_constant_gt_excludes_hrv_percentage(self):
        e = hr_hrv_errors([0, 95, 205, 300], [0, 100, 200, 300], 100.0)
        assert e.hrv_mae_ms is not None
        assert e.hrv_mape_pct is None
        assert e.excluded == ("hrv_mape",)

    def test_degenerate_ground_truth(self):
        with pytest.raises(GroundTruthDegenerate):
            hr_hrv_errors([0, 100, 200], [50], 100.0)


class TestCvSplit:
    def test_eight_subjects_even_folds(self):
        fa = cv_split([f"s{i}" for i in range(8)], k=4, seed=0)
        sizes = np.bincount(list(fa.mapping.values()), minlength=4)
        assert sizes.tolist() == [2, 2, 2, 2]

    def test_ten_subjects_pigeonhole(self):
        fa = cv_split([f"s{i}" for i in range(10)], k=4, seed=0)
        sizes = sorted(np.bincount(list(fa.mapping.values()), minlength=4).tolist())
        assert sizes == [2, 2, 3, 3]

    def test_deterministic_and_seed_sensitive(self):
        ids = [f"s{i}" for i in range(12)]
        a = cv_split(ids, seed=7)
        b = cv_split(ids, seed=7)
        assert a.mapping == b.mapping
        assert any(cv_split(ids, seed=s).mapping != a.mapping for s in range(1, 6))

    def test_every_subject_exactly_once(self):
        ids = [f"p{i}" for i in range(9)] * 3          # duplicates collapse
        fa = cv_split(ids, k=3, seed=1)
        assert sorted(fa.mapping) == sorted(set(ids))
        assert all(0 <= f < 3 for f in fa.mapping.values())

    def test_too_few_subjects(self):
        with pytest.raises(TooFewSubjects):
            cv_split(["a", "b", "c"], k=4)

    def test_assignment_is_hashable(self):
        fa = cv_split([f"s{i}" for i in range(8)], seed=0)
        assert isinstance(hash(fa), int)


class TestWelch:
    def test_identical_samples(self):
        res = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.t_stat == 0.0
        assert res.p_two_tailed == 1.0

    def test_shifted_unit_sequences(self):
        res = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert res.t_stat == -1.0
        assert res.dof == 8.0
        assert res.p_two_tailed == pytest.approx(float(two_tailed_p(1.0, 8.0)), abs=1e-10)

    def test_swap_negates_t_keeps_p(self):
        r1 = welch_t_test([1, 2, 3, 4, 5], [4, 5, 6, 7, 9])
        r2 = welch_t_test([4, 5, 6, 7, 9], [1, 2, 3, 4, 5])
        assert r1.t_stat == pytest.approx(-r2.t_stat)
        assert r1.p_two_tailed == pytest.approx(r2.p_two_tailed, abs=1e-14)

    def test_degenerate_samples(self):
        with pytest.raises(DegenerateSample):
            welch_t_test([1.0], [1.0, 2.0])
        with pytest.raises(DegenerateSample):
            welch_t_test([3.0, 3.0], [5.0, 5.0])

    def test_one_constant_side_is_fine(self):
        res = welch_t_test([3.0, 3.0, 3.0], [1.0, 2.0, 6.0])
        assert math.isfinite(res.t_stat)
        assert 0.0 < res.p_two_tailed <= 1.0

    def test_p_against_numerical_oracle(self):
        for t in (0.3, 1.0, 2.5, 6.0):
            for dof in (1.5, 4.0, 8.0, 30.0):
                assert student_p(t, dof) == pytest.approx(float(two_tailed_p(t, dof)), abs=1e-10)

    def test_p_monotone_in_t(self):
        ps = [student_p(t, 8.0) for t in (0.1, 0.5, 1.0, 2.0, 4.0)]
        assert all(b < a for a, b in zip(ps, ps[1:]))


def student_p(t, dof):
    from peakkit.evaluation import student_t_sf2
    return student_t_sf2(t, dof)


class TestScoreRows:
    def test_score_and_csv_round_trip(self, tmp_path):
        rows = [
            score_segment("seg0", "nabian", [0, 100, 200], [0, 100, 200], 100.0),
            score_segment("seg1", "nabian", [100], [0, 100, 200], 100.0),
        ]
        path = tmp_path / "scores.csv"
        write_score_csv(path, rows)
        with path.open() as fh:
            got = list(csv.reader(fh))
        assert tuple(got[0]) == SCORE_CSV_HEADER
        assert got[1][0] == "seg0" and float(got[1][5]) == 1.0
        assert got[2][6] == ""                      # excluded hr_mae stays blank
        assert got[2][10] == "hr;hrv"

    def test_aggregate_reports_exclusions(self):
        rows = [
            score_segment("a", "d", [0, 100, 200], [0, 100, 205], 100.0),
            score_segment("b", "d", [50], [0, 100, 205], 100.0),
        ]
        agg = aggregate_scores(rows)
        assert agg["n_segments"] == 2
        assert agg["exclusions"] == {"hr": 1, "hrv": 1}
        assert agg["f1"]["n"] == 2
        assert agg["hr_mae"]["n"] == 1

    def test_stats_csv(self, tmp_path):
        res = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        path = tmp_path / "stats.csv"
        write_stats_csv(path, [("f1", res)])
        with path.open() as fh:
            got = list(csv.reader(fh))
        assert tuple(got[0]) == STATS_CSV_HEADER
        assert got[1][0] == "f1"
        assert float(got[1][1]) == -1.0
        assert float(got[1][2]) == 8.0


class TestNoiseSweep:
    def test_clean_row_prepended_and_trend(self):
        seg = preprocess_segment(clean_family(Modality.ECG, count=1)[0])
        rows = noise_sweep(seg, pan_tompkins, [0.1, 0.5], seed=0,
                           detector_name="pan_tompkins")
        assert [s for s, _ in rows] == [0.0, 0.1, 0.5]
        assert rows[0][1].f1 == pytest.approx(1.0)
        assert rows[0][1].f1 >= rows[2][1].f1

    def test_deterministic(self):
        seg = preprocess_segment(clean_family(Modality.ECG, count=1)[0])
        a = noise_sweep(seg, pan_tompkins, [0.2], seed=5)
        b = noise_sweep(seg, pan_tompkins, [0.2], seed=5)
        assert a == b

    def test_nonpositive_sigma_rejected(self):
        seg = preprocess_segment(clean_family(Modality.ECG, count=1)[0])
        with pytest.raises(InvariantViolation):
            noise_sweep(seg, pan_tompkins, [0.0, 0.1])
