// Pure HTML renderers. Everything here is a string-in, string-out function
// so the vitest suite can check structure without a browser.

import type { AcceptanceStats, ProposalRecord, StatsBucket } from "./api.js";
import { contentText, diffTokens } from "./diff.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderDiff(oldContent: unknown, newContent: unknown): string {
  const spans = diffTokens(contentText(oldContent), contentText(newContent));
  const html = spans
    .map((s) => `<span class="diff-${s.kind}">${escapeHtml(s.text)}</span>`)
    .join("");
  return `<div class="diff">${html}</div>`;
}

export function renderCard(record: ProposalRecord): string {
  const p = record.proposal;
  const decided = record.status !== "pending";
  const citation = record.citation
    ? `<div class="citation">citation: <a href="${escapeHtml(record.citation.url)}">${escapeHtml(record.citation.url)}</a></div>`
    : "";
  const actions = decided
    ? `<div class="decided">decided: ${record.status}${record.reviewer ? ` by ${escapeHtml(record.reviewer)}` : ""}</div>`
    : `
      <div class="actions">
        <input class="citation-url" type="url" placeholder="citation URL (required to accept)" />
        <input class="citation-note" type="text" placeholder="note (optional)" />
        <button class="accept" data-id="${escapeHtml(p.id)}" disabled>Accept</button>
        <button class="reject" data-id="${escapeHtml(p.id)}">Reject</button>
        <span class="inline-error" role="alert"></span>
      </div>`;
  return `
  <article class="card status-${record.status}" data-id="${escapeHtml(p.id)}">
    <header>
      <span class="badge rule">${escapeHtml(p.rule)}</span>
      <span class="badge type">${escapeHtml(p.type)}</span>
      <span class="badge direction">${escapeHtml(p.direction)}</span>
      <span class="entity">${escapeHtml(p.entity_id)}</span>
    </header>
    ${renderDiff(p.old, p.new)}
    <pre class="description">${escapeHtml(record.description)}</pre>
    ${citation}
    ${actions}
  </article>`;
}

export function renderEmptyState(status: string): string {
  return `<p class="empty">No ${escapeHtml(status)} proposals.</p>`;
}

export function renderBanner(message: string): string {
  return `<div class="banner" role="alert">${escapeHtml(message)}</div>`;
}

function rate(bucket: StatsBucket): string {
  return bucket.rate === null ? "-" : `${bucket.rate.toFixed(2)}%`;
}

function statsRows(buckets: Record<string, StatsBucket>): string {
  return Object.keys(buckets)
    .sort()
    .map((name) => {
      const b = buckets[name];
      return `<tr><td>${escapeHtml(name)}</td><td>${b.total}</td><td>${b.accepted}</td><td>${b.rejected}</td><td>${b.pending}</td><td>${rate(b)}</td></tr>`;
    })
    .join("");
}

export function renderStats(stats: AcceptanceStats): string {
  const header =
    "<tr><th>group</th><th>total</th><th>accepted</th><th>rejected</th><th>pending</th><th>rate</th></tr>";
  const total = stats.total;
  return `
  <section class="stats">
    <h2>Acceptance by edit type</h2>
    <table>${header}${statsRows(stats.by_type)}</table>
    <h2>Acceptance by direction</h2>
    <table>${header}${statsRows(stats.by_direction)}</table>
    <h2>Overall</h2>
    <p class="headline">${total.accepted} of ${total.accepted + total.rejected} decided accepted (${rate(total)})</p>
  </section>`;
}

export function renderPager(page: number, total: number, pageSize: number): string {
  const pages = Math.max(1, Math.ceil(total / pageSize));
  return `
  <nav class="pager">
    <button class="prev" ${page <= 1 ? "disabled" : ""}>&laquo; prev</button>
    <span>page ${page} of ${pages} (${total} records)</span>
    <button class="next" ${page >= pages ? "disabled" : ""}>next &raquo;</button>
  </nav>`;
}
