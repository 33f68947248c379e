/** The review loop: fetch next paper, render it with query-term highlights,
 *  submit the human decision, refresh the server-computed numbers, repeat.
 *  The server is the single source of truth for every count on screen. */

import { DocumentView, ReviewApi, SessionResource } from "./api.js";
import { ProgressGauge } from "./gauge.js";
import { highlightTerms } from "./highlight.js";
import { LabelQueue, newEventId } from "./queue.js";
import { RecheckPanel } from "./recheck.js";

export class ReviewApp {
  readonly element: HTMLElement;
  readonly gauge: ProgressGauge;
  readonly recheckPanel: RecheckPanel;

  private api: ReviewApi;
  private queue: LabelQueue;
  private countsEl: HTMLElement;
  private badgeEl: HTMLElement;
  private cardEl: HTMLElement;
  private titleEl: HTMLElement;
  private abstractEl: HTMLElement;
  private rationaleEl: HTMLElement;
  private stopEl: HTMLElement;
  private stopSummaryEl: HTMLElement;
  private bannerEl: HTMLElement;
  private relevantBtn: HTMLButtonElement;
  private irrelevantBtn: HTMLButtonElement;

  current: DocumentView | null = null;
  resource: SessionResource | null = null;
  private busy = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    root: HTMLElement,
    api: ReviewApi,
    readonly sessionId: string,
    private queryTerms: string[],
    private pollMs = 1000,
  ) {
    this.api = api;
    this.queue = new LabelQueue(api, sessionId, (state) => {
      this.bannerEl.style.display = state.offline ? "block" : "none";
      if (state.lastResource) this.applyResource(state.lastResource);
    });

    this.element = document.createElement("div");
    this.element.className = "review-app";

    this.countsEl = el("div", "counts");
    this.badgeEl = el("span", "recheck-badge");
    this.gauge = new ProgressGauge();

    this.cardEl = el("section", "doc-card");
    this.titleEl = el("h2", "doc-title");
    this.abstractEl = el("p", "doc-abstract");
    this.rationaleEl = el("span", "rationale");
    this.relevantBtn = button("Relevant", "relevant");
    this.irrelevantBtn = button("Not relevant", "irrelevant");
    this.relevantBtn.addEventListener("click", () => void this.labelCurrent(true));
    this.irrelevantBtn.addEventListener("click", () => void this.labelCurrent(false));
    this.cardEl.append(this.titleEl, this.rationaleEl, this.abstractEl,
      this.relevantBtn, this.irrelevantBtn);

    this.stopEl = el("section", "stop-screen");
    this.stopEl.style.display = "none";
    this.stopSummaryEl = el("p", "stop-summary");
    const continueBtn = button("Continue anyway", "continue");
    continueBtn.addEventListener("click", () => void this.loadNext(true));
    this.stopEl.append(el("h2", "", "Target recall reached"), this.stopSummaryEl, continueBtn);

    this.bannerEl = el("div", "retry-banner", "Connection lost; labels queued and retrying");
    this.bannerEl.style.display = "none";

    this.recheckPanel = new RecheckPanel((docId, relevant) => {
      void this.relabel(docId, relevant);
    });

    const header = el("header", "header");
    header.append(this.countsEl, this.badgeEl, this.gauge.element);
    this.element.append(this.bannerEl, header, this.cardEl, this.stopEl,
      this.recheckPanel.element);
    root.append(this.element);
  }

  get stopVisible(): boolean {
    return this.stopEl.style.display !== "none";
  }

  async start(): Promise<void> {
    await this.refresh();
    await this.loadNext();
    if (this.pollMs > 0) {
      this.pollTimer = setInterval(() => void this.refresh(), this.pollMs);
    }
  }

  stop(): void {
    if (this.pollTimer) clearInterval(this.pollTimer);
  }

  /** Pull the latest server truth: counts, estimate, and the recheck queue. */
  async refresh(): Promise<void> {
    const resource = await this.api.resource(this.sessionId);
    this.applyResource(resource);
    if (resource.recheck_pending > 0) {
      this.recheckPanel.render(await this.api.recheck(this.sessionId));
    } else {
      this.recheckPanel.render([]);
    }
  }

  private applyResource(resource: SessionResource): void {
    this.resource = resource;
    const c = resource.counts;
    this.countsEl.textContent =
      `${c.labeled} reviewed | ${c.relevant} relevant | effort ${c.effort} | ${resource.status}`;
    this.badgeEl.textContent =
      resource.recheck_pending > 0 ? `recheck: ${resource.recheck_pending}` : "";
    this.gauge.update(c.relevant, resource.estimate?.estimated_relevant ?? null);
  }

  async loadNext(force = false): Promise<void> {
    const next = await this.api.next(this.sessionId, force);
    if (next.stopped) {
      this.current = null;
      this.cardEl.style.display = "none";
      const found = this.resource?.counts.relevant ?? 0;
      const estimated = this.resource?.estimate?.estimated_relevant ?? null;
      this.stopSummaryEl.textContent = estimated === null
        ? `${found} relevant papers found (${next.reason})`
        : `${found} of an estimated ${estimated} relevant papers found (${next.reason})`;
      this.stopEl.style.display = "block";
      return;
    }
    this.stopEl.style.display = "none";
    this.cardEl.style.display = "block";
    if (next.reseed_advisory) {
      this.bannerEl.textContent = next.reseed_advisory;
      this.bannerEl.style.display = "block";
      await this.loadNext(force);
      return;
    }
    this.current = next.document;
    this.titleEl.innerHTML = highlightTerms(next.document!.title, this.queryTerms);
    this.abstractEl.innerHTML = highlightTerms(next.document!.abstract, this.queryTerms);
    this.rationaleEl.textContent = next.rationale ?? "";
  }

  /** One click = one POST; the buttons stay disabled until the cycle ends. */
  async labelCurrent(relevant: boolean): Promise<void> {
    if (this.busy || !this.current) return;
    this.busy = true;
    this.relevantBtn.disabled = this.irrelevantBtn.disabled = true;
    try {
      const doc = this.current.id;
      this.queue.enqueue({ eventId: newEventId(), documentId: doc, relevant });
      await this.queue.flush();
      await this.refresh();
      await this.loadNext();
    } finally {
      this.busy = false;
      this.relevantBtn.disabled = this.irrelevantBtn.disabled = false;
    }
  }

  private async relabel(documentId: string, relevant: boolean): Promise<void> {
    this.queue.enqueue({ eventId: newEventId(), documentId, relevant });
    await this.queue.flush();
    await this.refresh();
  }
}

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, className: string): HTMLButtonElement {
  const node = document.createElement("button");
  node.className = className;
  node.textContent = label;
  return node;
}
