/** Label submissions survive network failures: decisions queue locally and
 *  flush in order; a client-generated event id keeps each decision to exactly
 *  one POST even when callers re-submit the same click. */

import { ReviewApi, SessionResource } from "./api.js";

export interface LabelDecision {
  eventId: string;
  documentId: string;
  relevant: boolean;
}

export type QueueListener = (state: {
  pending: number;
  offline: boolean;
  lastResource: SessionResource | null;
  lastError: Error | null;
}) => void;

let counter = 0;

export function newEventId(): string {
  counter += 1;
  return `ev-${Date.now().toString(36)}-${counter}`;
}

export class LabelQueue {
  private queue: LabelDecision[] = [];
  private seen = new Set<string>();
  private drain: Promise<void> | null = null;
  offline = false;
  lastResource: SessionResource | null = null;
  lastError: Error | null = null;

  constructor(
    private api: ReviewApi,
    private sessionId: string,
    private listener: QueueListener = () => {},
    private retryDelayMs = 1000,
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  /** Queue one decision; duplicates of an already-seen event id are dropped. */
  enqueue(decision: LabelDecision): boolean {
    if (this.seen.has(decision.eventId)) return false;
    this.seen.add(decision.eventId);
    this.queue.push(decision);
    this.notify();
    void this.flush();
    return true;
  }

  /** Resolves once every queued decision has been posted (or dropped). */
  flush(): Promise<void> {
    if (!this.drain) {
      this.drain = this.drainAll().finally(() => {
        this.drain = null;
      });
    }
    return this.drain;
  }

  private async drainAll(): Promise<void> {
    while (this.queue.length > 0) {
      const head = this.queue[0];
      try {
        this.lastResource = await this.api.label(
          this.sessionId,
          head.documentId,
          head.relevant,
        );
        this.offline = false;
        this.lastError = null;
        this.queue.shift();
        this.notify();
      } catch (err) {
        if (err instanceof TypeError || (err as Error).name === "NetworkError") {
          // network failure: keep the label queued, surface the retry banner
          this.offline = true;
          this.notify();
          await new Promise((r) => setTimeout(r, this.retryDelayMs));
        } else {
          // server rejected the label (e.g. already fixed): drop and
          // report through the listener; callers refresh and move on
          this.lastError = err as Error;
          this.queue.shift();
          this.notify();
        }
      }
    }
  }

  private notify(): void {
    this.listener({
      pending: this.queue.length,
      offline: this.offline,
      lastResource: this.lastResource,
      lastError: this.lastError,
    });
  }
}
