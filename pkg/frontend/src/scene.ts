/** Pure overlay model: segment payload in, drawable scene out.
 *
 * Keeping this free of DOM concerns means marker placement, offender
 * flagging, and hover text can be tested without a renderer. All
 * amplitudes and timestamps are copied from the payload verbatim.
 */

import type { SegmentView } from './types.js';

export interface Toggles {
  gt: boolean;
  selected: boolean;
  rejected: boolean;
  reconstruction: boolean;
}

export const DEFAULT_TOGGLES: Toggles = {
  gt: true,
  selected: true,
  rejected: true,
  reconstruction: false,
};

export type MarkerKind = 'gt' | 'selected' | 'rejected';

export interface Marker {
  kind: MarkerKind;
  index: number;
  x: number;
  y: number;
  amplitude: number;
  timestamp: string | null;
  offender: boolean;
  detail: string;
}

export interface Scene {
  width: number;
  height: number;
  empty: boolean;
  wavePoints: string;
  reconstructionPoints: string;
  markers: Marker[];
  /** cited timestamps that match no candidate, so they cannot be plotted */
  unplottable: string[];
}

const STAMP_RE = /\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}/g;
const PAD = 12;

export function citedTimestamps(explanation: string): string[] {
  return explanation.match(STAMP_RE) ?? [];
}

/** Lines of the explanation mentioning this timestamp, or '' if none. */
export function excerptFor(explanation: string, timestamp: string | null): string {
  if (!timestamp) return '';
  return explanation
    .split('\n')
    .filter((line) => line.includes(timestamp))
    .join('\n');
}

function detailText(
  kind: MarkerKind,
  index: number,
  amplitude: number,
  timestamp: string | null,
  explanation: string,
): string {
  const head = `${kind} peak  ts=${timestamp ?? '(none)'}  index=${index}  amplitude=${amplitude.toFixed(6)}`;
  const excerpt = excerptFor(explanation, timestamp);
  return excerpt ? `${head}\n${excerpt}` : head;
}

export function buildScene(
  seg: SegmentView,
  toggles: Toggles = DEFAULT_TOGGLES,
  width = 900,
  height = 300,
): Scene {
  const n = seg.samples.length;
  if (n < 2) {
    return {
      width,
      height,
      empty: true,
      wavePoints: '',
      reconstructionPoints: '',
      markers: [],
      unplottable: [],
    };
  }

  let lo = Infinity;
  let hi = -Infinity;
  for (const v of seg.samples) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo || 1; // flat trace still renders
  const toX = (i: number) => PAD + (i / (n - 1)) * (width - 2 * PAD);
  const toY = (v: number) => height - PAD - ((v - lo) / span) * (height - 2 * PAD);

  const wavePoints = seg.samples
    .map((v, i) => `${toX(i).toFixed(2)},${toY(v).toFixed(2)}`)
    .join(' ');

  const byIndex = new Map(seg.candidates.map((c) => [c.index, c]));
  const selectedSet = new Set(seg.output.ok ? seg.pred_indices : []);
  const gtSet = new Set(seg.gt_peaks);
  const explanation = seg.output.explanation;

  // explanation material becomes suspect when a content check fails
  const cited = new Set(citedTimestamps(explanation));
  const citedSuspect =
    !seg.checks.amplitudes_consistent || !seg.checks.intervals_consistent;
  const listMismatch = !seg.checks.peak_list_matches_gt;

  const offenderFor = (
    kind: MarkerKind,
    index: number,
    timestamp: string | null,
  ): boolean => {
    if (listMismatch && kind === 'selected' && !gtSet.has(index)) return true;
    if (listMismatch && kind === 'gt' && !selectedSet.has(index)) return true;
    if (citedSuspect && timestamp !== null && cited.has(timestamp)) return true;
    return false;
  };

  const markers: Marker[] = [];
  const push = (
    kind: MarkerKind,
    index: number,
    amplitude: number,
    timestamp: string | null,
  ) => {
    if (index < 0 || index >= n) return;
    markers.push({
      kind,
      index,
      x: toX(index),
      y: toY(amplitude),
      amplitude,
      timestamp,
      offender: offenderFor(kind, index, timestamp),
      detail: detailText(kind, index, amplitude, timestamp, explanation),
    });
  };

  if (toggles.gt) {
    for (const g of seg.gt_peaks) {
      const amp = seg.samples[g];
      if (amp === undefined) continue;
      push('gt', g, amp, byIndex.get(g)?.timestamp ?? null);
    }
  }
  if (toggles.selected && seg.output.ok) {
    seg.pred_indices.forEach((idx, i) => {
      const amp = byIndex.get(idx)?.amplitude ?? seg.samples[idx];
      if (amp === undefined) return;
      push('selected', idx, amp, seg.output.timestamps[i] ?? null);
    });
  }
  if (toggles.rejected) {
    for (const c of seg.candidates) {
      if (selectedSet.has(c.index)) continue;
      push('rejected', c.index, c.amplitude, c.timestamp);
    }
  }

  const reconstructionPoints = toggles.reconstruction
    ? seg.candidates
        .map((c) => `${toX(c.index).toFixed(2)},${toY(c.amplitude).toFixed(2)}`)
        .join(' ')
    : '';

  const known = new Set(seg.candidates.map((c) => c.timestamp));
  const unplottable = seg.checks.all_timestamps_in_candidates
    ? []
    : [...cited].filter((ts) => !known.has(ts));

  return {
    width,
    height,
    empty: false,
    wavePoints,
    reconstructionPoints,
    markers,
    unplottable,
  };
}
