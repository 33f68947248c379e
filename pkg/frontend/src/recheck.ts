/** Recheck panel: papers whose stored label the model disputes, shown with the
 *  prior decision next to the machine's probability. Relabels go through the
 *  same labels endpoint as first-pass decisions. */

import { RecheckItem } from "./api.js";

export type RelabelHandler = (documentId: string, relevant: boolean) => void;

export class RecheckPanel {
  readonly element: HTMLElement;
  private list: HTMLElement;
  private heading: HTMLElement;

  constructor(private onRelabel: RelabelHandler) {
    this.element = document.createElement("section");
    this.element.className = "recheck-panel";
    this.element.style.display = "none";
    this.heading = document.createElement("h2");
    this.heading.textContent = "Recheck queue";
    this.list = document.createElement("div");
    this.list.className = "recheck-list";
    this.element.append(this.heading, this.list);
  }

  get visible(): boolean {
    return this.element.style.display !== "none";
  }

  render(items: RecheckItem[]): void {
    this.list.textContent = "";
    if (items.length === 0) {
      this.element.style.display = "none";
      return;
    }
    this.element.style.display = "block";
    this.heading.textContent = `Recheck queue (${items.length})`;
    for (const item of items) {
      const card = document.createElement("div");
      card.className = "recheck-card";
      card.dataset.doc = item.document_id;

      const title = document.createElement("div");
      title.className = "recheck-title";
      title.textContent = item.title;

      const detail = document.createElement("div");
      detail.className = "recheck-detail";
      const prior = item.prior_label ? "relevant" : "non-relevant";
      const prob = (item.probability * 100).toFixed(0);
      detail.textContent = `you said ${prior}; model gives ${prob}% relevance`;

      const keep = document.createElement("button");
      keep.className = "keep";
      keep.textContent = `Confirm ${prior}`;
      keep.addEventListener("click", () => this.onRelabel(item.document_id, item.prior_label));

      const flip = document.createElement("button");
      flip.className = "flip";
      flip.textContent = `Change to ${item.prior_label ? "non-relevant" : "relevant"}`;
      flip.addEventListener("click", () => this.onRelabel(item.document_id, !item.prior_label));

      card.append(title, detail, keep, flip);
      this.list.append(card);
    }
  }
}
