import { afterEach, describe, expect, it, vi } from "vitest";

import {
  ApiError,
  buildQuery,
  decide,
  decisionBody,
  fetchStats,
  listProposals,
} from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("buildQuery", () => {
  it("serializes only present filters", () => {
    expect(buildQuery({})).toBe("");
    expect(buildQuery({ status: "pending", page: 2, page_size: 10 })).toBe(
      "?status=pending&page=2&page_size=10",
    );
    expect(buildQuery({ rule: "R3", direction: "en->hi" })).toBe(
      "?rule=R3&direction=en-%3Ehi",
    );
  });
});

describe("decisionBody", () => {
  it("omits the citation when no URL was typed", () => {
    expect(decisionBody("reject", "r", "")).toEqual({
      decision: "reject",
      reviewer: "r",
    });
  });

  it("carries the trimmed citation", () => {
    expect(decisionBody("accept", "r", " https://x.org/a ", "note")).toEqual({
      decision: "accept",
      reviewer: "r",
      citation: { url: "https://x.org/a", note: "note" },
    });
  });
});

describe("requests", () => {
  it("lists proposals with filters", async () => {
    const page = { items: [], total: 0, page: 1, page_size: 10 };
    const mock = vi.spyOn(globalThis, "fetch").mockResolvedValue(jsonResponse(page));
    await expect(listProposals({ status: "pending" })).resolves.toEqual(page);
    expect(mock).toHaveBeenCalledWith("proposals?status=pending", undefined);
  });

  it("posts decisions as JSON", async () => {
    const mock = vi
      .spyOn(globalThis, "fetch")
      .mockResolvedValue(jsonResponse({ status: "accepted" }));
    await decide("abc", "accept", "me", "https://x.org/ref");
    const [url, init] = mock.mock.calls[0];
    expect(url).toBe("proposals/abc/decision");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(String(init?.body))).toEqual({
      decision: "accept",
      reviewer: "me",
      citation: { url: "https://x.org/ref", note: "" },
    });
  });

  it("maps HTTP errors to ApiError with the detail", async () => {
    vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse({ detail: "already accepted" }, 409),
    );
    const err = await decide("abc", "reject", "me", "").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toBe("already accepted");
  });

  it("maps network failure to status 0", async () => {
    vi.spyOn(globalThis, "fetch").mockRejectedValue(new TypeError("refused"));
    const err = await fetchStats().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
  });
});
