import { describe, expect, it } from 'vitest';
import { actionForKey } from '../src/keys.js';

describe('actionForKey', () => {
  it('maps 1/2/3 to the three labels', () => {
    expect(actionForKey('1')).toEqual({ kind: 'label', label: 'CONCISE' });
    expect(actionForKey('2')).toEqual({ kind: 'label', label: 'AMBIGUOUS' });
    expect(actionForKey('3')).toEqual({ kind: 'label', label: 'INCORRECT' });
  });

  it('maps arrows to navigation', () => {
    expect(actionForKey('ArrowDown')).toEqual({ kind: 'nav', delta: 1 });
    expect(actionForKey('ArrowRight')).toEqual({ kind: 'nav', delta: 1 });
    expect(actionForKey('ArrowUp')).toEqual({ kind: 'nav', delta: -1 });
    expect(actionForKey('ArrowLeft')).toEqual({ kind: 'nav', delta: -1 });
  });

  it('maps letters to layer toggles and Enter to retry', () => {
    expect(actionForKey('g')).toEqual({ kind: 'toggle', layer: 'gt' });
    expect(actionForKey('p')).toEqual({ kind: 'toggle', layer: 'selected' });
    expect(actionForKey('r')).toEqual({ kind: 'toggle', layer: 'rejected' });
    expect(actionForKey('c')).toEqual({ kind: 'toggle', layer: 'reconstruction' });
    expect(actionForKey('Enter')).toEqual({ kind: 'retry' });
  });

  it('ignores everything else', () => {
    for (const key of ['4', 'a', ' ', 'Escape', 'Tab', 'F1']) {
      expect(actionForKey(key)).toBeNull();
    }
  });
});
