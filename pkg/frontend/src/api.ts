/** Thin client for the three review endpoints.
 *
 * Every response is structurally validated before it reaches the UI so a
 * malformed payload surfaces as a banner, not a crash deep in rendering.
 */

import type {
  Bundle,
  BundleRecord,
  BundleSummary,
  CheckReport,
  LabelAck,
  ReviewLabel,
  SegmentView,
} from './types.js';
import { LABELS } from './types.js';

export type ApiErrorKind = 'network' | 'http' | 'format';

export class ApiError extends Error {
  readonly kind: ApiErrorKind;
  readonly status: number | null;

  constructor(kind: ApiErrorKind, message: string, status: number | null = null) {
    super(message);
    this.name = 'ApiError';
    this.kind = kind;
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const isObj = (v: unknown): v is Record<string, unknown> =>
  typeof v === 'object' && v !== null && !Array.isArray(v);
const isNum = (v: unknown): v is number => typeof v === 'number' && Number.isFinite(v);
const isStr = (v: unknown): v is string => typeof v === 'string';
const isBool = (v: unknown): v is boolean => typeof v === 'boolean';

function fail(where: string): never {
  throw new ApiError('format', `unexpected payload shape at ${where}`);
}

function asChecks(v: unknown, where: string): CheckReport {
  if (!isObj(v)) fail(where);
  const keys = [
    'peak_list_matches_gt',
    'all_timestamps_in_candidates',
    'amplitudes_consistent',
    'intervals_consistent',
    'template_ok',
    'overall',
  ] as const;
  for (const k of keys) if (!isBool(v[k])) fail(`${where}.${k}`);
  return v as unknown as CheckReport;
}

function asSummary(v: unknown, where: string): BundleSummary {
  if (!isObj(v)) fail(where);
  for (const k of ['total', 'passed', 'rejected', 'duplicates_dropped', 'labeled']) {
    if (!isNum(v[k])) fail(`${where}.${k}`);
  }
  if (!isObj(v['label_counts'])) fail(`${where}.label_counts`);
  return v as unknown as BundleSummary;
}

function asRecord(v: unknown, where: string): BundleRecord {
  if (!isObj(v)) fail(where);
  if (!isStr(v['record_id']) || !isStr(v['segment_ref']) || !isStr(v['raw_output'])) {
    fail(where);
  }
  asChecks(v['checks'], `${where}.checks`);
  if (v['label'] !== null && !isStr(v['label'])) fail(`${where}.label`);
  return v as unknown as BundleRecord;
}

export function asBundle(doc: unknown): Bundle {
  if (!isObj(doc)) fail('bundle');
  const records = doc['records'];
  if (!Array.isArray(records)) fail('bundle.records');
  records.forEach((r, i) => asRecord(r, `bundle.records[${i}]`));
  asSummary(doc['summary'], 'bundle.summary');
  if (!Array.isArray(doc['label_log'])) fail('bundle.label_log');
  return doc as unknown as Bundle;
}

export function asSegment(doc: unknown): SegmentView {
  if (!isObj(doc)) fail('segment');
  if (!isStr(doc['record_id']) || !isStr(doc['modality'])) fail('segment');
  for (const k of ['samples', 'gt_peaks', 'pred_indices', 'candidates'] as const) {
    if (!Array.isArray(doc[k])) fail(`segment.${k}`);
  }
  for (const s of doc['samples'] as unknown[]) if (!isNum(s)) fail('segment.samples[]');
  for (const g of doc['gt_peaks'] as unknown[]) if (!isNum(g)) fail('segment.gt_peaks[]');
  for (const c of doc['candidates'] as unknown[]) {
    if (!isObj(c) || !isNum(c['index']) || !isNum(c['amplitude']) || !isStr(c['timestamp'])) {
      fail('segment.candidates[]');
    }
  }
  const out = doc['output'];
  if (!isObj(out) || !isBool(out['ok']) || !isStr(out['explanation'])) fail('segment.output');
  if (!Array.isArray(out['timestamps'])) fail('segment.output.timestamps');
  asChecks(doc['checks'], 'segment.checks');
  return doc as unknown as SegmentView;
}

function asAck(doc: unknown): LabelAck {
  if (!isObj(doc)) fail('ack');
  if (doc['status'] !== 'recorded' && doc['status'] !== 'unchanged') fail('ack.status');
  asSummary(doc['summary'], 'ack.summary');
  return doc as unknown as LabelAck;
}

/** What the app needs from a client; lets tests substitute a canned one. */
export interface ApiShape {
  bundle(): Promise<Bundle>;
  segment(recordId: string): Promise<SegmentView>;
  postLabel(recordId: string, reviewerId: string, label: ReviewLabel): Promise<LabelAck>;
}

export class Api implements ApiShape {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = '', fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, '');
    // wrap to avoid illegal-invocation on detached window.fetch
    const f = fetchFn ?? globalThis.fetch;
    this.fetchFn = (input, init) => f(input, init);
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError('network', `request failed: ${String(err)}`);
    }
    let doc: unknown;
    try {
      doc = await res.json();
    } catch {
      throw new ApiError('format', `non-JSON response from ${path}`, res.status);
    }
    if (!res.ok) {
      const msg = isObj(doc) && isStr(doc['error']) ? doc['error'] : `HTTP ${res.status}`;
      throw new ApiError('http', msg, res.status);
    }
    return doc;
  }

  async bundle(): Promise<Bundle> {
    return asBundle(await this.request('/bundle'));
  }

  async segment(recordId: string): Promise<SegmentView> {
    return asSegment(await this.request(`/segment/${encodeURIComponent(recordId)}`));
  }

  async postLabel(recordId: string, reviewerId: string, label: ReviewLabel): Promise<LabelAck> {
    if (!(LABELS as readonly string[]).includes(label)) {
      throw new ApiError('format', `not a reviewer label: ${label}`);
    }
    const doc = await this.request('/label', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ record_id: recordId, reviewer_id: reviewerId, label }),
    });
    return asAck(doc);
  }
}
