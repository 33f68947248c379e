/** Typed client for the review session API. Every number shown in the UI
 *  comes from these responses; the client computes nothing itself. */

export interface SessionCounts {
  labeled: number;
  relevant: number;
  effort: number;
}

export interface EstimateView {
  estimated_relevant: number;
  iterations: number;
  converged: boolean;
}

export interface SessionResource {
  session_id: string;
  dataset: string;
  status: string;
  counts: SessionCounts;
  estimate: EstimateView | null;
  recheck_pending: number;
  stop_reason: string | null;
}

export interface DocumentView {
  id: string;
  title: string;
  abstract: string;
}

export interface NextResponse {
  stopped: boolean;
  reason: string | null;
  document: DocumentView | null;
  rationale: string | null;
  reseed_advisory: string | null;
}

export interface EstimateResponse {
  estimated_relevant: number;
  found: number;
  remaining_fraction: number;
}

export interface RecheckItem {
  document_id: string;
  title: string;
  prior_label: boolean;
  probability: number;
  threshold: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && body.detail) detail = String(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ReviewApi {
  constructor(private baseUrl: string, private fetchFn: typeof fetch = fetch) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}/api/v1${path}`;
  }

  async createSession(body: {
    dataset: string;
    query_terms: string[];
    target_recall?: number;
    recheck_interval?: number;
    seed?: number;
  }): Promise<SessionResource> {
    const resp = await this.fetchFn(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<SessionResource>(resp);
  }

  async resource(sessionId: string): Promise<SessionResource> {
    return asJson(await this.fetchFn(this.url(`/sessions/${sessionId}`)));
  }

  async next(sessionId: string, force = false): Promise<NextResponse> {
    const suffix = force ? "?force=true" : "";
    return asJson(await this.fetchFn(this.url(`/sessions/${sessionId}/next${suffix}`)));
  }

  async label(sessionId: string, documentId: string, relevant: boolean): Promise<SessionResource> {
    const resp = await this.fetchFn(this.url(`/sessions/${sessionId}/labels`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ document_id: documentId, relevant }),
    });
    return asJson<SessionResource>(resp);
  }

  async estimate(sessionId: string): Promise<EstimateResponse> {
    return asJson(await this.fetchFn(this.url(`/sessions/${sessionId}/estimate`)));
  }

  async recheck(sessionId: string): Promise<RecheckItem[]> {
    const body = await asJson<{ items: RecheckItem[] }>(
      await this.fetchFn(this.url(`/sessions/${sessionId}/recheck`)),
    );
    return body.items;
  }
}
