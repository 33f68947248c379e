import { describe, expect, it, vi } from "vitest";

import { ReviewApi } from "../src/api.js";
import { LabelQueue, newEventId } from "../src/queue.js";

function resourceBody(effort: number) {
  return {
    session_id: "s", dataset: "d", status: "learning",
    counts: { labeled: effort, relevant: 0, effort },
    estimate: null, recheck_pending: 0, stop_reason: null,
  };
}

function okResponse(effort: number): Response {
  return new Response(JSON.stringify(resourceBody(effort)), {
    status: 200, headers: { "Content-Type": "application/json" },
  });
}

describe("LabelQueue", () => {
  it("posts each decision exactly once", async () => {
    const fetchFn = vi.fn(async () => okResponse(1));
    const api = new ReviewApi("http://x", fetchFn as unknown as typeof fetch);
    const queue = new LabelQueue(api, "s");
    const decision = { eventId: newEventId(), documentId: "d1", relevant: true };
    expect(queue.enqueue(decision)).toBe(true);
    expect(queue.enqueue(decision)).toBe(false); // duplicate event id dropped
    await queue.flush();
    expect(fetchFn).toHaveBeenCalledTimes(1);
  });

  it("keeps labels queued across network failures and flushes them later", async () => {
    let failures = 2;
    const fetchFn = vi.fn(async () => {
      if (failures > 0) {
        failures -= 1;
        throw new TypeError("fetch failed");
      }
      return okResponse(1);
    });
    const api = new ReviewApi("http://x", fetchFn as unknown as typeof fetch);
    const states: boolean[] = [];
    const queue = new LabelQueue(api, "s", (s) => states.push(s.offline), 1);
    queue.enqueue({ eventId: newEventId(), documentId: "d1", relevant: false });
    await vi.waitFor(() => expect(queue.pending).toBe(0), { timeout: 2000 });
    expect(states).toContain(true); // retry banner was shown
    expect(queue.offline).toBe(false); // and cleared after the flush
    expect(fetchFn).toHaveBeenCalledTimes(3);
  });

  it("drops a label the server rejects instead of looping", async () => {
    const fetchFn = vi.fn(async () => new Response(
      JSON.stringify({ detail: "unknown document" }), { status: 404 }));
    const api = new ReviewApi("http://x", fetchFn as unknown as typeof fetch);
    const queue = new LabelQueue(api, "s");
    queue.enqueue({ eventId: newEventId(), documentId: "ghost", relevant: true });
    await vi.waitFor(() => expect(queue.pending).toBe(0), { timeout: 2000 });
    expect(fetchFn).toHaveBeenCalledTimes(1);
    expect(queue.lastError?.message).toContain("unknown document");
  });

  it("flushes queued decisions in submission order", async () => {
    const seen: string[] = [];
    const fetchFn = vi.fn(async (_url: string, init?: RequestInit) => {
      seen.push(JSON.parse(String(init!.body)).document_id);
      return okResponse(seen.length);
    });
    const api = new ReviewApi("http://x", fetchFn as unknown as typeof fetch);
    const queue = new LabelQueue(api, "s");
    queue.enqueue({ eventId: newEventId(), documentId: "a", relevant: true });
    queue.enqueue({ eventId: newEventId(), documentId: "b", relevant: false });
    queue.enqueue({ eventId: newEventId(), documentId: "c", relevant: true });
    await vi.waitFor(() => expect(queue.pending).toBe(0), { timeout: 2000 });
    expect(seen).toEqual(["a", "b", "c"]);
  });
});

describe("newEventId", () => {
  it("never repeats", () => {
    const ids = new Set(Array.from({ length: 500 }, () => newEventId()));
    expect(ids.size).toBe(500);
  });
});
