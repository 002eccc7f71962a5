import { describe, expect, it } from 'vitest';
import type { ApiShape } from '../src/api.js';
import { ApiError } from '../src/api.js';
import { mountApp } from '../src/app.js';
import type { Bundle, LabelAck, ReviewLabel, SegmentView } from '../src/types.js';
import {
  flush,
  makeBundle,
  makeChecks,
  makeDom,
  makeRecord,
  makeSegment,
  makeSummary,
} from './helpers.js';

interface FakeOptions {
  bundle?: Bundle;
  failBundle?: boolean;
  failLabelOnce?: string; // record_id whose first POST dies after reaching the log
}

function fakeApi(opts: FakeOptions = {}) {
  const records = opts.bundle?.records ?? [
    makeRecord('pass-1'),
    makeRecord('fail-1', { checks: makeChecks({ template_ok: false }) }),
    makeRecord('pass-2'),
  ];
  const bundle = opts.bundle ?? makeBundle(records);
  const posts: Array<[string, string, ReviewLabel]> = [];
  const log: Array<{ record_id: string; label: ReviewLabel }> = [];
  let mustFail = opts.failLabelOnce ?? null;

  const api: ApiShape = {
    async bundle() {
      if (opts.failBundle) throw new ApiError('network', 'request failed: refused');
      return bundle;
    },
    async segment(rid: string): Promise<SegmentView> {
      const rec = bundle.records.find((r) => r.record_id === rid);
      if (!rec) throw new ApiError('http', 'no record', 404);
      return makeSegment({
        record_id: rid,
        segment_ref: rec.segment_ref,
        checks: rec.checks,
      });
    },
    async postLabel(rid: string, _rev: string, label: ReviewLabel): Promise<LabelAck> {
      posts.push([rid, _rev, label]);
      const last = [...log].reverse().find((e) => e.record_id === rid);
      const unchanged = last?.label === label;
      if (!unchanged) log.push({ record_id: rid, label });
      if (mustFail === rid) {
        // the write landed but the response is lost on the way back
        mustFail = null;
        throw new ApiError('network', 'request failed: socket hang up');
      }
      return {
        status: unchanged ? 'unchanged' : 'recorded',
        summary: makeSummary({ total: bundle.records.length, labeled: log.length }),
      };
    },
  };
  return { api, posts, log };
}

function key(window: ReturnType<typeof makeDom>['window'], k: string) {
  const ev = new (window as any).KeyboardEvent('keydown', {
    key: k,
    bubbles: true,
    cancelable: true,
  });
  (window.document as any).dispatchEvent(ev);
}

describe('App', () => {
  it('loads the bundle, lists failures first, and opens the first record', async () => {
    const { root } = makeDom();
    const { api } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    expect(app.orderedIds()).toEqual(['fail-1', 'pass-1', 'pass-2']);
    expect(app.current).toBe('fail-1');
    const rows = root.querySelectorAll('li.record-row');
    expect(rows).toHaveLength(3);
    expect(rows[0]?.textContent).toContain('fail-1');
    expect(root.querySelectorAll('.marker-gt').length).toBeGreaterThan(0);
  });

  it('surfaces a bundle failure as a banner, not a crash', async () => {
    const { root } = makeDom();
    const { api } = fakeApi({ failBundle: true });
    const app = mountApp(root, api, 'tester');
    await app.ready;
    const banner = root.querySelector('#banner');
    expect(banner?.classList.contains('hidden')).toBe(false);
    expect(banner?.textContent).toContain('could not load bundle');
  });

  it('navigates with arrow keys and clamps at the ends', async () => {
    const { root, window } = makeDom();
    const { api } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    key(window, 'ArrowDown');
    await flush();
    expect(app.current).toBe('pass-1');
    key(window, 'ArrowRight');
    await flush();
    expect(app.current).toBe('pass-2');
    key(window, 'ArrowDown');
    await flush();
    expect(app.current).toBe('pass-2');
    key(window, 'ArrowUp');
    key(window, 'ArrowUp');
    key(window, 'ArrowUp');
    await flush();
    expect(app.current).toBe('fail-1');
  });

  it('labels the current record from the keyboard', async () => {
    const { root, window } = makeDom();
    const { api, posts, log } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    key(window, '2');
    await flush();
    expect(posts).toEqual([['fail-1', 'tester', 'AMBIGUOUS']]);
    expect(log).toEqual([{ record_id: 'fail-1', label: 'AMBIGUOUS' }]);
    expect(root.querySelector('.label-chip')?.textContent).toBe('AMBIGUOUS');
    expect(root.querySelector('#status')?.textContent).toContain('recorded');
  });

  it('a key mash sends at most one request per change', async () => {
    const { root, window } = makeDom();
    const { api, posts } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    key(window, '1');
    key(window, '1');
    key(window, '1');
    await flush(6);
    key(window, '1');
    await flush(6);
    expect(posts.filter(([rid]) => rid === 'fail-1')).toHaveLength(1);
  });

  it('label buttons work too and update the header summary', async () => {
    const { root } = makeDom();
    const { api, log } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    (root.querySelector('button[data-label="INCORRECT"]') as HTMLButtonElement).click();
    await flush(6);
    expect(log).toEqual([{ record_id: 'fail-1', label: 'INCORRECT' }]);
    expect(root.querySelector('.summary')?.textContent).toContain('1 labeled');
  });

  it('offers a retry after a lost acknowledgment and does not double-log', async () => {
    const { root, window } = makeDom();
    const { api, posts, log } = fakeApi({ failLabelOnce: 'fail-1' });
    const app = mountApp(root, api, 'tester');
    await app.ready;

    const first = await app.label('CONCISE');
    expect(first?.kind).toBe('failed');
    const retryBtn = root.querySelector('#retry') as HTMLButtonElement;
    expect(retryBtn.classList.contains('hidden')).toBe(false);
    expect(root.querySelector('#status')?.textContent).toContain('send failed');

    // Enter triggers the retry path; the server already holds the write
    key(window, 'Enter');
    await flush(6);
    expect(posts).toHaveLength(2);
    expect(log).toEqual([{ record_id: 'fail-1', label: 'CONCISE' }]);
    expect(retryBtn.classList.contains('hidden')).toBe(true);
    expect(root.querySelector('#status')?.textContent).toContain('CONCISE');
    expect(root.querySelector('.label-chip')?.textContent).toBe('CONCISE');
  });

  it('keyboard toggles redraw the overlay without the hidden layer', async () => {
    const { root, window } = makeDom();
    const { api } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    expect(root.querySelectorAll('.marker-rejected').length).toBeGreaterThan(0);
    key(window, 'r');
    await flush();
    expect(root.querySelectorAll('.marker-rejected')).toHaveLength(0);
    expect(root.querySelectorAll('.marker-gt').length).toBeGreaterThan(0);
    key(window, 'r');
    await flush();
    expect(root.querySelectorAll('.marker-rejected').length).toBeGreaterThan(0);
  });

  it('hover fills the detail panel', async () => {
    const { root, window } = makeDom();
    const { api } = fakeApi();
    const app = mountApp(root, api, 'tester');
    await app.ready;
    const marker = root.querySelector('.marker-selected');
    marker?.dispatchEvent(new (window as any).MouseEvent('mouseenter'));
    const detail = root.querySelector('#hover-detail');
    expect(detail?.textContent).toContain('selected peak');
    expect(detail?.textContent).toContain('amplitude=');
  });

  it('an empty bundle shows the empty state and disables labeling', async () => {
    const { root } = makeDom();
    const { api } = fakeApi({ bundle: makeBundle([]) });
    const app = mountApp(root, api, 'tester');
    await app.ready;
    expect(root.querySelector('.empty-state')).not.toBeNull();
    for (const b of root.querySelectorAll('button.label-btn')) {
      expect((b as HTMLButtonElement).disabled).toBe(true);
    }
  });
});
