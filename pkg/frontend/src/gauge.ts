/** Recall-progress gauge: found / estimated, clamped into [0, 1]. */

export function gaugeValue(found: number, estimated: number | null): number {
  if (estimated === null || estimated <= 0) return 0;
  const ratio = found / estimated;
  return Math.min(1, Math.max(0, ratio));
}

export class ProgressGauge {
  readonly element: HTMLElement;
  private bar: HTMLProgressElement;
  private text: HTMLElement;

  constructor() {
    this.element = document.createElement("div");
    this.element.className = "gauge";
    this.bar = document.createElement("progress");
    this.bar.max = 1000;
    this.bar.value = 0;
    this.text = document.createElement("span");
    this.text.className = "gauge-text";
    this.text.textContent = "estimate pending";
    this.element.append(this.bar, this.text);
  }

  update(found: number, estimated: number | null): void {
    const value = gaugeValue(found, estimated);
    this.bar.value = Math.round(value * 1000);
    this.text.textContent =
      estimated === null
        ? "estimate pending"
        : `${found} of ~${estimated} relevant found (${Math.round(value * 100)}%)`;
  }
}
