/** Bootstrap: join an existing session via ?session=... or create one from the
 *  start form. The server origin defaults to the page's own origin. */

import { ReviewApi } from "./api.js";
import { ReviewApp } from "./app.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? window.location.origin;
  const api = new ReviewApi(server);

  const sessionId = params.get("session");
  const query = (params.get("query") ?? "").split("+").filter(Boolean);
  if (sessionId) {
    const app = new ReviewApp(root, api, sessionId, query);
    await app.start();
    return;
  }

  const form = document.createElement("form");
  form.className = "start-form";
  form.innerHTML = `
    <h2>Start a review</h2>
    <label>Dataset <input name="dataset" required placeholder="dataset name"></label>
    <label>Keywords <input name="query" required placeholder="defect prediction"></label>
    <label>Target recall <input name="recall" value="0.95"></label>
    <button type="submit">Start</button>`;
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    const terms = String(data.get("query") ?? "").trim().split(/\s+/);
    const resource = await api.createSession({
      dataset: String(data.get("dataset") ?? ""),
      query_terms: terms,
      target_recall: Number(data.get("recall") ?? 0.95),
    });
    form.remove();
    const app = new ReviewApp(root, api, resource.session_id, terms);
    await app.start();
  });
  root.append(form);
}

void boot();
