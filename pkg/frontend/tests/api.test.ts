import { describe, expect, it, vi } from "vitest";

import { ApiError, ReviewApi } from "../src/api.js";

describe("ReviewApi", () => {
  it("targets the versioned API prefix", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      expect(url).toBe("http://srv/api/v1/sessions/abc/next");
      return new Response(JSON.stringify({
        stopped: false, reason: null, rationale: "bm25-seed",
        document: { id: "d1", title: "t", abstract: "a" }, reseed_advisory: null,
      }));
    });
    const api = new ReviewApi("http://srv/", fetchFn as unknown as typeof fetch);
    const next = await api.next("abc");
    expect(next.document!.id).toBe("d1");
  });

  it("passes the force flag for continue-anyway", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      expect(url).toContain("?force=true");
      return new Response(JSON.stringify({
        stopped: false, reason: null, rationale: "certainty",
        document: { id: "d2", title: "t", abstract: "a" }, reseed_advisory: null,
      }));
    });
    const api = new ReviewApi("http://srv", fetchFn as unknown as typeof fetch);
    await api.next("abc", true);
    expect(fetchFn).toHaveBeenCalledOnce();
  });

  it("raises ApiError with the server detail", async () => {
    const fetchFn = vi.fn(async () => new Response(
      JSON.stringify({ detail: "unknown session" }), { status: 404 }));
    const api = new ReviewApi("http://srv", fetchFn as unknown as typeof fetch);
    await expect(api.resource("nope")).rejects.toThrowError(ApiError);
    await expect(api.resource("nope")).rejects.toThrow("unknown session");
  });

  it("serializes label posts as the API expects", async () => {
    const fetchFn = vi.fn(async (url: string, init?: RequestInit) => {
      expect(url).toBe("http://srv/api/v1/sessions/s1/labels");
      expect(JSON.parse(String(init!.body))).toEqual({ document_id: "d9", relevant: true });
      return new Response(JSON.stringify({
        session_id: "s1", dataset: "d", status: "learning",
        counts: { labeled: 1, relevant: 1, effort: 1 },
        estimate: null, recheck_pending: 0, stop_reason: null,
      }));
    });
    const api = new ReviewApi("http://srv", fetchFn as unknown as typeof fetch);
    const resource = await api.label("s1", "d9", true);
    expect(resource.counts.relevant).toBe(1);
  });
});
