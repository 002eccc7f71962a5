/** Label submission with client-side idempotency and a retry path.
 *
 * The server already deduplicates an identical retry against the last
 * logged event for the (record, reviewer) pair; this mirrors that rule
 * locally so a double click or a retry after a dropped response never
 * fires a redundant request while one is in flight.
 */

import type { LabelAck, ReviewLabel } from './types.js';

export type PostFn = (
  recordId: string,
  reviewerId: string,
  label: ReviewLabel,
) => Promise<LabelAck>;

export type SubmitOutcome =
  | { kind: 'acked'; ack: LabelAck }
  | { kind: 'duplicate' } // same label already acknowledged, nothing sent
  | { kind: 'busy' } // a submit for this record is still in flight
  | { kind: 'failed'; error: Error };

export class LabelSubmitter {
  private readonly post: PostFn;
  readonly reviewerId: string;
  // mirrors the server rule: only the last acknowledged label counts
  private readonly lastAcked = new Map<string, ReviewLabel>();
  private readonly inFlight = new Set<string>();
  private readonly failures = new Map<string, ReviewLabel>();

  constructor(post: PostFn, reviewerId: string) {
    this.post = post;
    this.reviewerId = reviewerId;
  }

  pendingRetry(recordId: string): ReviewLabel | null {
    return this.failures.get(recordId) ?? null;
  }

  async submit(recordId: string, label: ReviewLabel): Promise<SubmitOutcome> {
    if (this.inFlight.has(recordId)) return { kind: 'busy' };
    if (this.lastAcked.get(recordId) === label) return { kind: 'duplicate' };
    this.inFlight.add(recordId);
    try {
      const ack = await this.post(recordId, this.reviewerId, label);
      this.lastAcked.set(recordId, label);
      this.failures.delete(recordId);
      return { kind: 'acked', ack };
    } catch (err) {
      this.failures.set(recordId, label);
      return {
        kind: 'failed',
        error: err instanceof Error ? err : new Error(String(err)),
      };
    } finally {
      this.inFlight.delete(recordId);
    }
  }

  /** Re-send the label whose acknowledgment was lost. */
  async retry(recordId: string): Promise<SubmitOutcome> {
    const label = this.failures.get(recordId);
    if (label === undefined) return { kind: 'duplicate' };
    return this.submit(recordId, label);
  }
}
