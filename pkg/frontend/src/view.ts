/** DOM rendering helpers.
 *
 * Everything is created through the owner document of the mount point, so
 * the same code runs in a browser and under a synthetic DOM in tests. No
 * framework: the workbench is one list, one plot, and a button row.
 */

import type { Marker, Scene } from './scene.js';
import type { BundleRecord, BundleSummary, CheckReport, SegmentView } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface ViewRefs {
  summary: HTMLElement;
  banner: HTMLElement;
  list: HTMLElement;
  plot: SVGSVGElement;
  plotFallback: HTMLElement;
  unplottable: HTMLElement;
  hoverDetail: HTMLElement;
  checks: HTMLElement;
  explanation: HTMLElement;
  status: HTMLElement;
  retryButton: HTMLButtonElement;
  labelButtons: Map<string, HTMLButtonElement>;
  toggleBoxes: Map<string, HTMLInputElement>;
  reviewerInput: HTMLInputElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Build the static skeleton once; later renders fill the refs. */
export function buildSkeleton(root: HTMLElement): ViewRefs {
  const doc = root.ownerDocument;
  root.textContent = '';

  const header = el(doc, 'header', 'topbar');
  header.appendChild(el(doc, 'h1', undefined, 'peak review workbench'));
  const summary = el(doc, 'span', 'summary');
  header.appendChild(summary);
  const reviewerWrap = el(doc, 'label', 'reviewer', 'reviewer ');
  const reviewerInput = el(doc, 'input');
  reviewerInput.id = 'reviewer-id';
  reviewerInput.value = 'reviewer';
  reviewerWrap.appendChild(reviewerInput);
  header.appendChild(reviewerWrap);
  root.appendChild(header);

  const banner = el(doc, 'div', 'banner hidden');
  banner.id = 'banner';
  root.appendChild(banner);

  const layout = el(doc, 'div', 'layout');
  const aside = el(doc, 'aside', 'records');
  const list = el(doc, 'ul', 'record-list');
  list.id = 'record-list';
  aside.appendChild(list);
  layout.appendChild(aside);

  const main = el(doc, 'section', 'inspector');

  const plot = doc.createElementNS(SVG_NS, 'svg') as SVGSVGElement;
  plot.setAttribute('class', 'plot');
  plot.setAttribute('role', 'img');
  main.appendChild(plot);
  const plotFallback = el(doc, 'div', 'plot-fallback hidden');
  main.appendChild(plotFallback);
  const unplottable = el(doc, 'div', 'unplottable hidden');
  main.appendChild(unplottable);

  const toggles = el(doc, 'div', 'toggles');
  const toggleBoxes = new Map<string, HTMLInputElement>();
  for (const [layer, text] of [
    ['gt', 'annotated (g)'],
    ['selected', 'model peaks (p)'],
    ['rejected', 'rejected (r)'],
    ['reconstruction', 'candidate curve (c)'],
  ] as const) {
    const wrap = el(doc, 'label', 'toggle');
    const box = el(doc, 'input');
    box.type = 'checkbox';
    box.dataset['layer'] = layer;
    wrap.appendChild(box);
    wrap.appendChild(doc.createTextNode(' ' + text));
    toggles.appendChild(wrap);
    toggleBoxes.set(layer, box);
  }
  main.appendChild(toggles);

  const hoverDetail = el(doc, 'pre', 'hover-detail', 'hover a marker for details');
  hoverDetail.id = 'hover-detail';
  main.appendChild(hoverDetail);

  const checks = el(doc, 'div', 'checks');
  main.appendChild(checks);

  const explanation = el(doc, 'pre', 'explanation');
  main.appendChild(explanation);

  const actions = el(doc, 'div', 'actions');
  const labelButtons = new Map<string, HTMLButtonElement>();
  for (const [label, caption] of [
    ['CONCISE', '1 concise'],
    ['AMBIGUOUS', '2 ambiguous'],
    ['INCORRECT', '3 incorrect'],
  ] as const) {
    const b = el(doc, 'button', 'label-btn', caption);
    b.dataset['label'] = label;
    b.disabled = true;
    actions.appendChild(b);
    labelButtons.set(label, b);
  }
  const retryButton = el(doc, 'button', 'retry-btn hidden', 'retry send');
  retryButton.id = 'retry';
  actions.appendChild(retryButton);
  const status = el(doc, 'span', 'status');
  status.id = 'status';
  actions.appendChild(status);
  main.appendChild(actions);

  const hint = el(
    doc,
    'footer',
    'keys-hint',
    'keys: 1/2/3 label, arrows navigate, g/p/r/c toggle layers, Enter retry',
  );
  main.appendChild(hint);

  layout.appendChild(main);
  root.appendChild(layout);

  return {
    summary,
    banner,
    list,
    plot,
    plotFallback,
    unplottable,
    hoverDetail,
    checks,
    explanation,
    status,
    retryButton,
    labelButtons,
    toggleBoxes,
    reviewerInput,
  };
}

export function renderSummary(target: HTMLElement, s: BundleSummary): void {
  const counts = s.label_counts;
  target.textContent =
    `${s.total} records, ${s.rejected} rejected, ${s.labeled} labeled ` +
    `(C ${counts['CONCISE'] ?? 0} / A ${counts['AMBIGUOUS'] ?? 0} / I ${counts['INCORRECT'] ?? 0})`;
}

export function setBanner(target: HTMLElement, message: string | null): void {
  target.textContent = message ?? '';
  target.classList.toggle('hidden', message === null);
}

export function renderList(
  list: HTMLElement,
  records: readonly BundleRecord[],
  currentId: string | null,
  onSelect: (recordId: string) => void,
): void {
  const doc = list.ownerDocument;
  list.textContent = '';
  if (records.length === 0) {
    const empty = el(doc, 'li', 'empty-state', 'bundle is empty');
    list.appendChild(empty);
    return;
  }
  for (const rec of records) {
    const item = el(doc, 'li', 'record-row');
    item.dataset['recordId'] = rec.record_id;
    if (rec.record_id === currentId) item.classList.add('current');
    const badge = el(
      doc,
      'span',
      rec.checks.overall ? 'badge pass' : 'badge fail',
      rec.checks.overall ? 'PASS' : 'FAIL',
    );
    item.appendChild(badge);
    item.appendChild(el(doc, 'span', 'rid', rec.record_id));
    if (rec.label) item.appendChild(el(doc, 'span', 'label-chip', rec.label));
    item.addEventListener('click', () => onSelect(rec.record_id));
    list.appendChild(item);
  }
}

function markerNode(doc: Document, m: Marker, onHover: (m: Marker) => void): Element {
  let node: Element;
  if (m.kind === 'gt') {
    node = doc.createElementNS(SVG_NS, 'circle');
    node.setAttribute('cx', m.x.toFixed(2));
    node.setAttribute('cy', m.y.toFixed(2));
    node.setAttribute('r', '5');
  } else if (m.kind === 'selected') {
    node = doc.createElementNS(SVG_NS, 'path');
    const { x, y } = m;
    node.setAttribute(
      'd',
      `M ${x} ${y - 6} L ${x + 6} ${y} L ${x} ${y + 6} L ${x - 6} ${y} Z`,
    );
  } else {
    node = doc.createElementNS(SVG_NS, 'path');
    const { x, y } = m;
    node.setAttribute(
      'd',
      `M ${x - 4} ${y - 4} L ${x + 4} ${y + 4} M ${x - 4} ${y + 4} L ${x + 4} ${y - 4}`,
    );
  }
  node.setAttribute('class', `marker marker-${m.kind}${m.offender ? ' offender' : ''}`);
  node.setAttribute('data-index', String(m.index));
  const title = doc.createElementNS(SVG_NS, 'title');
  title.textContent = m.detail;
  node.appendChild(title);
  node.addEventListener('mouseenter', () => onHover(m));
  return node;
}

export function renderScene(
  svg: SVGSVGElement,
  scene: Scene,
  onHover: (m: Marker) => void,
): void {
  const doc = svg.ownerDocument;
  svg.textContent = '';
  svg.setAttribute('viewBox', `0 0 ${scene.width} ${scene.height}`);
  if (scene.empty) return;

  const wave = doc.createElementNS(SVG_NS, 'polyline');
  wave.setAttribute('class', 'wave');
  wave.setAttribute('points', scene.wavePoints);
  svg.appendChild(wave);

  if (scene.reconstructionPoints) {
    const rec = doc.createElementNS(SVG_NS, 'polyline');
    rec.setAttribute('class', 'reconstruction');
    rec.setAttribute('points', scene.reconstructionPoints);
    svg.appendChild(rec);
  }

  // a flag line calls out each offender position before markers go on top
  for (const m of scene.markers) {
    if (!m.offender) continue;
    const flag = doc.createElementNS(SVG_NS, 'line');
    flag.setAttribute('class', 'offender-flag');
    flag.setAttribute('x1', m.x.toFixed(2));
    flag.setAttribute('x2', m.x.toFixed(2));
    flag.setAttribute('y1', '4');
    flag.setAttribute('y2', m.y.toFixed(2));
    svg.appendChild(flag);
  }
  for (const m of scene.markers) {
    svg.appendChild(markerNode(doc, m, onHover));
  }
}

/** Table fallback when a segment arrives without plottable samples. */
export function renderCandidateTable(target: HTMLElement, seg: SegmentView): void {
  const doc = target.ownerDocument;
  target.textContent = '';
  const table = el(doc, 'table', 'candidate-table');
  const head = el(doc, 'tr');
  for (const h of ['index', 'timestamp', 'amplitude', 'polarity']) {
    head.appendChild(el(doc, 'th', undefined, h));
  }
  table.appendChild(head);
  for (const c of seg.candidates) {
    const row = el(doc, 'tr');
    row.appendChild(el(doc, 'td', undefined, String(c.index)));
    row.appendChild(el(doc, 'td', undefined, c.timestamp));
    row.appendChild(el(doc, 'td', undefined, c.amplitude.toFixed(6)));
    row.appendChild(el(doc, 'td', undefined, c.polarity));
    table.appendChild(row);
  }
  target.appendChild(table);
}

export function renderUnplottable(target: HTMLElement, stamps: readonly string[]): void {
  if (stamps.length === 0) {
    target.textContent = '';
    target.classList.add('hidden');
    return;
  }
  target.textContent = `cited but not among candidates: ${stamps.join(', ')}`;
  target.classList.remove('hidden');
}

const CHECK_CAPTIONS: ReadonlyArray<[keyof CheckReport, string]> = [
  ['peak_list_matches_gt', 'peak list'],
  ['all_timestamps_in_candidates', 'timestamps'],
  ['amplitudes_consistent', 'amplitudes'],
  ['intervals_consistent', 'intervals'],
  ['template_ok', 'template'],
  ['overall', 'overall'],
];

export function renderChecks(target: HTMLElement, checks: CheckReport): void {
  const doc = target.ownerDocument;
  target.textContent = '';
  for (const [key, caption] of CHECK_CAPTIONS) {
    const ok = checks[key];
    const chip = el(doc, 'span', ok ? 'check ok' : 'check bad', caption);
    chip.dataset['check'] = key;
    target.appendChild(chip);
  }
}

export function renderStatus(
  target: HTMLElement,
  text: string,
  tone: 'ok' | 'warn' | 'err' | '' = '',
): void {
  target.textContent = text;
  target.className = tone ? `status ${tone}` : 'status';
}
