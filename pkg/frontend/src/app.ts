/** Workbench controller: wires the API client, the overlay scene, and the
 * label submitter to the DOM. One reviewer session per tab; the server's
 * append-only log keeps accidental concurrent tabs safe.
 */

import { ApiError, type ApiShape } from './api.js';
import { actionForKey } from './keys.js';
import { orderRecords } from './order.js';
import { buildScene, DEFAULT_TOGGLES, type Marker, type Toggles } from './scene.js';
import { LabelSubmitter, type SubmitOutcome } from './submit.js';
import type { BundleRecord, BundleSummary, ReviewLabel, SegmentView } from './types.js';
import {
  buildSkeleton,
  renderCandidateTable,
  renderChecks,
  renderList,
  renderScene,
  renderStatus,
  renderSummary,
  renderUnplottable,
  setBanner,
  type ViewRefs,
} from './view.js';

export class App {
  readonly ready: Promise<void>;
  private readonly api: ApiShape;
  private readonly refs: ViewRefs;
  private submitter: LabelSubmitter;

  private records: BundleRecord[] = [];
  private summary: BundleSummary | null = null;
  private currentId: string | null = null;
  private readonly segments = new Map<string, SegmentView>();
  private toggles: Toggles = { ...DEFAULT_TOGGLES };
  private retryTarget: string | null = null;

  constructor(root: HTMLElement, api: ApiShape, reviewerId = 'reviewer') {
    this.api = api;
    this.refs = buildSkeleton(root);
    this.refs.reviewerInput.value = reviewerId;
    this.submitter = this.makeSubmitter(reviewerId);
    this.wire(root);
    this.ready = this.load();
  }

  private makeSubmitter(reviewerId: string): LabelSubmitter {
    return new LabelSubmitter(
      (rid, rev, label) => this.api.postLabel(rid, rev, label),
      reviewerId,
    );
  }

  private wire(root: HTMLElement): void {
    const doc = root.ownerDocument;
    doc.addEventListener('keydown', (ev: KeyboardEvent) => {
      const target = ev.target as HTMLElement | null;
      const tag = target?.tagName?.toLowerCase();
      if (tag === 'input' || tag === 'textarea') return;
      const action = actionForKey(ev.key);
      if (!action) return;
      ev.preventDefault();
      if (action.kind === 'label') void this.label(action.label);
      else if (action.kind === 'nav') this.moveSelection(action.delta);
      else if (action.kind === 'toggle') this.setToggle(action.layer, !this.toggles[action.layer]);
      else void this.retry();
    });
    for (const [label, btn] of this.refs.labelButtons) {
      btn.addEventListener('click', () => void this.label(label as ReviewLabel));
    }
    this.refs.retryButton.addEventListener('click', () => void this.retry());
    for (const [layer, box] of this.refs.toggleBoxes) {
      box.checked = this.toggles[layer as keyof Toggles];
      box.addEventListener('change', () =>
        this.setToggle(layer as keyof Toggles, box.checked),
      );
    }
    // a new reviewer identity gets a fresh dedup cache
    this.refs.reviewerInput.addEventListener('change', () => {
      this.submitter = this.makeSubmitter(this.refs.reviewerInput.value || 'reviewer');
    });
  }

  private async load(): Promise<void> {
    try {
      const bundle = await this.api.bundle();
      this.records = orderRecords(bundle.records);
      this.summary = bundle.summary;
      setBanner(this.refs.banner, null);
      renderSummary(this.refs.summary, bundle.summary);
      this.renderRecordList();
      const first = this.records[0];
      if (first) await this.selectRecord(first.record_id);
    } catch (err) {
      this.showError('could not load bundle', err);
    }
  }

  private showError(prefix: string, err: unknown): void {
    const detail =
      err instanceof ApiError ? `${err.kind}: ${err.message}` : String(err);
    setBanner(this.refs.banner, `${prefix} (${detail})`);
  }

  private renderRecordList(): void {
    renderList(this.refs.list, this.records, this.currentId, (rid) =>
      void this.selectRecord(rid),
    );
  }

  get current(): string | null {
    return this.currentId;
  }

  orderedIds(): string[] {
    return this.records.map((r) => r.record_id);
  }

  async selectRecord(recordId: string): Promise<void> {
    let seg = this.segments.get(recordId);
    if (!seg) {
      try {
        seg = await this.api.segment(recordId);
      } catch (err) {
        this.showError(`could not load record ${recordId}`, err);
        return;
      }
      this.segments.set(recordId, seg);
    }
    this.currentId = recordId;
    setBanner(this.refs.banner, null);
    this.renderRecordList();
    this.renderSegment(seg);
    for (const btn of this.refs.labelButtons.values()) btn.disabled = false;
    this.refreshRetryAffordance();
  }

  private renderSegment(seg: SegmentView): void {
    const scene = buildScene(seg, this.toggles);
    renderScene(this.refs.plot, scene, (m: Marker) => {
      this.refs.hoverDetail.textContent = m.detail;
    });
    this.refs.plot.classList.toggle('hidden', scene.empty);
    this.refs.plotFallback.classList.toggle('hidden', !scene.empty);
    if (scene.empty) renderCandidateTable(this.refs.plotFallback, seg);
    renderUnplottable(this.refs.unplottable, scene.unplottable);
    renderChecks(this.refs.checks, seg.checks);
    this.refs.explanation.textContent = seg.output.ok
      ? seg.output.explanation
      : `unparseable output: ${seg.output.failure ?? 'unknown failure'}`;
  }

  moveSelection(delta: 1 | -1): void {
    if (this.records.length === 0) return;
    const ids = this.orderedIds();
    const at = this.currentId ? ids.indexOf(this.currentId) : -1;
    const next = Math.min(Math.max(at + delta, 0), ids.length - 1);
    const id = ids[next];
    if (id && id !== this.currentId) void this.selectRecord(id);
  }

  setToggle(layer: keyof Toggles, on: boolean): void {
    this.toggles = { ...this.toggles, [layer]: on };
    const box = this.refs.toggleBoxes.get(layer);
    if (box) box.checked = on;
    const seg = this.currentId ? this.segments.get(this.currentId) : undefined;
    if (seg) this.renderSegment(seg);
  }

  async label(label: ReviewLabel): Promise<SubmitOutcome | null> {
    const rid = this.currentId;
    if (!rid) return null;
    const rec = this.records.find((r) => r.record_id === rid);
    const previous = rec?.label ?? null;
    // optimistic chip; reverted if the send fails
    if (rec) rec.label = label;
    this.renderRecordList();
    renderStatus(this.refs.status, `sending ${label}...`);
    const outcome = await this.submitter.submit(rid, label);
    if (outcome.kind === 'acked') {
      this.summary = outcome.ack.summary;
      renderSummary(this.refs.summary, outcome.ack.summary);
      renderStatus(this.refs.status, `${label} ${outcome.ack.status}`, 'ok');
    } else if (outcome.kind === 'duplicate') {
      renderStatus(this.refs.status, `${label} already recorded`, 'ok');
    } else if (outcome.kind === 'busy') {
      if (rec) rec.label = previous;
      renderStatus(this.refs.status, 'a send is already in flight', 'warn');
    } else {
      if (rec) rec.label = previous;
      this.retryTarget = rid;
      renderStatus(this.refs.status, `send failed: ${outcome.error.message}`, 'err');
    }
    this.renderRecordList();
    this.refreshRetryAffordance();
    return outcome;
  }

  async retry(): Promise<SubmitOutcome | null> {
    const rid = this.retryTarget;
    if (!rid) return null;
    const pending = this.submitter.pendingRetry(rid);
    if (!pending) {
      this.retryTarget = null;
      this.refreshRetryAffordance();
      return null;
    }
    renderStatus(this.refs.status, `retrying ${pending}...`);
    const outcome = await this.submitter.retry(rid);
    if (outcome.kind === 'acked') {
      this.retryTarget = null;
      const rec = this.records.find((r) => r.record_id === rid);
      if (rec) rec.label = pending;
      this.summary = outcome.ack.summary;
      renderSummary(this.refs.summary, outcome.ack.summary);
      renderStatus(this.refs.status, `${pending} ${outcome.ack.status}`, 'ok');
      this.renderRecordList();
    } else if (outcome.kind === 'failed') {
      renderStatus(this.refs.status, `retry failed: ${outcome.error.message}`, 'err');
    }
    this.refreshRetryAffordance();
    return outcome;
  }

  private refreshRetryAffordance(): void {
    const show = this.retryTarget !== null
      && this.submitter.pendingRetry(this.retryTarget) !== null;
    this.refs.retryButton.classList.toggle('hidden', !show);
  }
}

export function mountApp(root: HTMLElement, api: ApiShape, reviewerId?: string): App {
  return new App(root, api, reviewerId);
}
