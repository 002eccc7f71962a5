/** Shared fixtures and a synthetic DOM for the unit suites. */

import { Window } from 'happy-dom';
import type {
  Bundle,
  BundleRecord,
  BundleSummary,
  CheckReport,
  SegmentView,
} from '../src/types.js';

export function makeChecks(overrides: Partial<CheckReport> = {}): CheckReport {
  const base = {
    peak_list_matches_gt: true,
    all_timestamps_in_candidates: true,
    amplitudes_consistent: true,
    intervals_consistent: true,
    template_ok: true,
  };
  const merged = { ...base, ...overrides };
  const overall =
    overrides.overall ??
    (merged.peak_list_matches_gt &&
      merged.all_timestamps_in_candidates &&
      merged.amplitudes_consistent &&
      merged.intervals_consistent &&
      merged.template_ok);
  return { ...merged, overall };
}

export function makeRecord(
  id: string,
  overrides: Partial<BundleRecord> & { checks?: CheckReport } = {},
): BundleRecord {
  return {
    record_id: id,
    segment_ref: `seg-${id}`,
    raw_output: 'R peaks: ...',
    checks: makeChecks(),
    label: null,
    reviewer_id: null,
    ...overrides,
  };
}

export function makeSummary(overrides: Partial<BundleSummary> = {}): BundleSummary {
  return {
    total: 0,
    passed: 0,
    rejected: 0,
    duplicates_dropped: 0,
    labeled: 0,
    label_counts: { CONCISE: 0, AMBIGUOUS: 0, INCORRECT: 0 },
    ...overrides,
  };
}

export function makeBundle(records: BundleRecord[]): Bundle {
  const rejected = records.filter((r) => !r.checks.overall).length;
  return {
    version: 1,
    records,
    label_log: [],
    summary: makeSummary({
      total: records.length,
      passed: records.length - rejected,
      rejected,
    }),
  };
}

const stamp = (s: number) =>
  `2020-01-01 00:00:${String(s).padStart(2, '0')}`;

/** 100-sample trace with bumps at 10/40/70 and lesser wiggles between.
 *
 * Candidates sit at 5, 10, 25, 40, 55, 70, 85; ground truth and the model
 * selection agree on 10/40/70 unless an override says otherwise.
 */
export function makeSegment(overrides: Partial<SegmentView> = {}): SegmentView {
  const samples = Array.from({ length: 100 }, (_, i) => {
    for (const p of [10, 40, 70]) {
      const d = Math.abs(i - p);
      if (d <= 3) return 0.9 - 0.2 * d;
    }
    for (const p of [5, 25, 55, 85]) {
      const d = Math.abs(i - p);
      if (d <= 2) return 0.3 - 0.1 * d;
    }
    return 0.0;
  });
  const candidateIdx = [5, 10, 25, 40, 55, 70, 85];
  const candidates = candidateIdx.map((index) => ({
    index,
    amplitude: samples[index]!,
    timestamp: stamp(index),
    polarity: 'MAX' as const,
  }));
  const gt = [10, 40, 70];
  const explanation = [
    `Detected 3 target peaks among ${candidates.length} candidates.`,
    `Candidate (${stamp(10)}, 0.900000) is a dominant apex.`,
    `The interval between ${stamp(10)} and ${stamp(40)} is 30 seconds, consistent with a regular rhythm.`,
  ].join('\n');
  return {
    record_id: 'rec-a',
    segment_ref: 'seg-rec-a',
    modality: 'ECG',
    fs: 100,
    samples,
    gt_peaks: gt,
    candidates,
    output: {
      ok: true,
      failure: null,
      peak_label: 'R',
      timestamps: gt.map(stamp),
      explanation,
    },
    pred_indices: [...gt],
    checks: makeChecks(),
    label: null,
    reviewer_id: null,
    ...overrides,
  };
}

export { stamp };

/** Fresh synthetic window; callers treat it as a standard DOM. */
export function makeDom(): { window: Window; document: Document; root: HTMLElement } {
  const window = new Window();
  const document = window.document as unknown as Document;
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById('app') as HTMLElement;
  return { window, document, root };
}

export async function flush(times = 3): Promise<void> {
  for (let i = 0; i < times; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export async function until(
  cond: () => boolean | Promise<boolean>,
  timeoutMs = 5000,
  stepMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!(await cond())) {
    if (Date.now() > deadline) throw new Error('condition not reached in time');
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}
