import type { Toggles } from './scene.js';
import type { ReviewLabel } from './types.js';

export type KeyAction =
  | { kind: 'label'; label: ReviewLabel }
  | { kind: 'nav'; delta: 1 | -1 }
  | { kind: 'toggle'; layer: keyof Toggles }
  | { kind: 'retry' };

/** Keyboard-first labeling: 1/2/3 label, arrows navigate, letters toggle. */
export function actionForKey(key: string): KeyAction | null {
  switch (key) {
    case '1':
      return { kind: 'label', label: 'CONCISE' };
    case '2':
      return { kind: 'label', label: 'AMBIGUOUS' };
    case '3':
      return { kind: 'label', label: 'INCORRECT' };
    case 'ArrowDown':
    case 'ArrowRight':
      return { kind: 'nav', delta: 1 };
    case 'ArrowUp':
    case 'ArrowLeft':
      return { kind: 'nav', delta: -1 };
    case 'g':
      return { kind: 'toggle', layer: 'gt' };
    case 'p':
      return { kind: 'toggle', layer: 'selected' };
    case 'r':
      return { kind: 'toggle', layer: 'rejected' };
    case 'c':
      return { kind: 'toggle', layer: 'reconstruction' };
    case 'Enter':
      return { kind: 'retry' };
    default:
      return null;
  }
}
