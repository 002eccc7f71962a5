import type { BundleRecord } from './types.js';

/** Records with a failed rule check come first; ties keep bundle order. */
export function orderRecords(records: readonly BundleRecord[]): BundleRecord[] {
  return [...records].sort(
    (a, b) => Number(a.checks.overall) - Number(b.checks.overall),
  );
}
