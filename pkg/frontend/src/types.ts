/** Wire types for the review server endpoints.
 *
 * Shapes mirror the JSON the server emits; the workbench never invents
 * numbers of its own, every displayed value traces back to one of these
 * payloads.
 */

export interface CheckReport {
  peak_list_matches_gt: boolean;
  all_timestamps_in_candidates: boolean;
  amplitudes_consistent: boolean;
  intervals_consistent: boolean;
  template_ok: boolean;
  overall: boolean;
}

export interface BundleRecord {
  record_id: string;
  segment_ref: string;
  raw_output: string;
  checks: CheckReport;
  label: string | null;
  reviewer_id: string | null;
}

export interface LabelEvent {
  ts: number;
  record_id: string;
  reviewer_id: string;
  label: string;
}

export interface BundleSummary {
  total: number;
  passed: number;
  rejected: number;
  duplicates_dropped: number;
  labeled: number;
  label_counts: Record<string, number>;
}

export interface Bundle {
  version: number;
  records: BundleRecord[];
  label_log: LabelEvent[];
  summary: BundleSummary;
}

export interface Candidate {
  index: number;
  amplitude: number;
  timestamp: string;
  polarity: 'MAX' | 'MIN';
}

export interface OutputView {
  ok: boolean;
  failure: string | null;
  peak_label: string | null;
  timestamps: string[];
  explanation: string;
}

export interface SegmentView {
  record_id: string;
  segment_ref: string;
  modality: string;
  fs: number;
  samples: number[];
  gt_peaks: number[];
  candidates: Candidate[];
  output: OutputView;
  pred_indices: number[];
  checks: CheckReport;
  label: string | null;
  reviewer_id: string | null;
}

export const LABELS = ['CONCISE', 'AMBIGUOUS', 'INCORRECT'] as const;
export type ReviewLabel = (typeof LABELS)[number];

export interface LabelAck {
  status: 'recorded' | 'unchanged';
  summary: BundleSummary;
}
