// Review queue single-page app. State always re-derives from the API after
// every action; the client never mutates a decided record locally.

import {
  ApiError,
  decide,
  fetchStats,
  listProposals,
  type ProposalPage,
  type QueueFilter,
} from "./api.js";
import { blockedReason, canSubmitDecision, citationUrlValid } from "./guards.js";
import {
  renderBanner,
  renderCard,
  renderEmptyState,
  renderPager,
  renderStats,
} from "./render.js";

const PAGE_SIZE = 10;

interface ViewState {
  tab: "pending" | "accepted" | "rejected" | "stats";
  page: number;
  rule: string;
  direction: string;
}

const state: ViewState = { tab: "pending", page: 1, rule: "", direction: "" };

function element<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

async function refresh(): Promise<void> {
  const content = element<HTMLDivElement>("#content");
  document.querySelectorAll(".tab").forEach((button) => {
    button.classList.toggle("active", (button as HTMLElement).dataset.tab === state.tab);
  });
  try {
    if (state.tab === "stats") {
      content.innerHTML = renderStats(await fetchStats());
      return;
    }
    const filter: QueueFilter = {
      status: state.tab,
      page: state.page,
      page_size: PAGE_SIZE,
    };
    if (state.rule) filter.rule = state.rule;
    if (state.direction) filter.direction = state.direction;
    const page: ProposalPage = await listProposals(filter);
    if (page.items.length === 0) {
      content.innerHTML = renderEmptyState(state.tab);
      return;
    }
    content.innerHTML =
      page.items.map(renderCard).join("") +
      renderPager(page.page, page.total, page.page_size);
    wireCards(content);
    wirePager(content, page);
  } catch (err) {
    const message =
      err instanceof ApiError && err.status === 0
        ? "Review service is unreachable."
        : `Failed to load: ${(err as Error).message}`;
    content.innerHTML = renderBanner(message);
  }
}

function wireCards(content: HTMLElement): void {
  content.querySelectorAll<HTMLElement>(".card").forEach((card) => {
    const url = card.querySelector<HTMLInputElement>(".citation-url");
    const note = card.querySelector<HTMLInputElement>(".citation-note");
    const accept = card.querySelector<HTMLButtonElement>("button.accept");
    const reject = card.querySelector<HTMLButtonElement>("button.reject");
    const error = card.querySelector<HTMLElement>(".inline-error");
    if (!url || !accept || !reject || !error) return;

    // accept stays disabled until the citation looks like a URL
    url.addEventListener("input", () => {
      accept.disabled = !citationUrlValid(url.value);
    });

    const submit = async (decision: "accept" | "reject") => {
      const record = { status: "pending" as const };
      if (!canSubmitDecision(record, decision, url.value)) {
        error.textContent = blockedReason(record, decision, url.value);
        return;
      }
      try {
        await decide(card.dataset.id!, decision, reviewerName(), url.value,
                     note?.value ?? "");
        await refresh();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          error.textContent = "already decided by someone else";
          await refresh();
        } else {
          error.textContent = (err as Error).message;
        }
      }
    };
    accept.addEventListener("click", () => void submit("accept"));
    reject.addEventListener("click", () => void submit("reject"));
  });
}

function wirePager(content: HTMLElement, page: ProposalPage): void {
  content.querySelector<HTMLButtonElement>(".pager .prev")?.addEventListener(
    "click", () => {
      state.page = Math.max(1, state.page - 1);
      void refresh();
    });
  content.querySelector<HTMLButtonElement>(".pager .next")?.addEventListener(
    "click", () => {
      const pages = Math.ceil(page.total / page.page_size);
      state.page = Math.min(pages, state.page + 1);
      void refresh();
    });
}

function reviewerName(): string {
  return element<HTMLInputElement>("#reviewer").value.trim() || "anonymous";
}

export function start(): void {
  document.querySelectorAll<HTMLElement>(".tab").forEach((button) => {
    button.addEventListener("click", () => {
      state.tab = button.dataset.tab as ViewState["tab"];
      state.page = 1;
      void refresh();
    });
  });
  element<HTMLSelectElement>("#rule-filter").addEventListener("change", (ev) => {
    state.rule = (ev.target as HTMLSelectElement).value;
    state.page = 1;
    void refresh();
  });
  element<HTMLInputElement>("#direction-filter").addEventListener("change", (ev) => {
    state.direction = (ev.target as HTMLInputElement).value.trim();
    state.page = 1;
    void refresh();
  });
  void refresh();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  start();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
