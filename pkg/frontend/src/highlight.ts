/** Query-term highlighting that matches what the model saw: lowercase ASCII
 *  alphanumeric runs are the token unit, so highlights line up with the
 *  server-side tokenizer. */

const TOKEN_RUN = /[A-Za-z0-9]+/g;

export function highlightTerms(text: string, terms: string[]): string {
  const wanted = new Set(terms.map((t) => t.toLowerCase()));
  if (wanted.size === 0) return escapeHtml(text);
  let out = "";
  let last = 0;
  for (const match of text.matchAll(TOKEN_RUN)) {
    const start = match.index ?? 0;
    const token = match[0];
    out += escapeHtml(text.slice(last, start));
    if (wanted.has(token.toLowerCase())) {
      out += `<mark>${escapeHtml(token)}</mark>`;
    } else {
      out += escapeHtml(token);
    }
    last = start + token.length;
  }
  out += escapeHtml(text.slice(last));
  return out;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
