import { describe, expect, it } from "vitest";

import { contentText, diffTokens, newTextOf, oldTextOf } from "../src/diff.js";

// deterministic pseudo-random strings for the lossless property
function mulberry32(seed: number): () => number {
  return () => {
    seed |= 0;
    seed = (seed + 0x6d2b79f5) | 0;
    let t = Math.imul(seed ^ (seed >>> 15), 1 | seed);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomText(rand: () => number): string {
  const words = ["alpha", "beta", "gamma", "delta", "42", "x"];
  const n = Math.floor(rand() * 8);
  const parts: string[] = [];
  for (let i = 0; i < n; i++) {
    parts.push(words[Math.floor(rand() * words.length)]);
    parts.push(rand() < 0.2 ? "  " : " ");
  }
  return parts.join("");
}

describe("diffTokens", () => {
  it("marks identical text as one same-span", () => {
    const spans = diffTokens("a b c", "a b c");
    expect(spans).toEqual([{ kind: "same", text: "a b c" }]);
  });

  it("classifies additions and removals", () => {
    const spans = diffTokens("actor", "actor producer");
    expect(spans.filter((s) => s.kind === "added").map((s) => s.text).join(""))
      .toBe(" producer");
    expect(spans.some((s) => s.kind === "removed")).toBe(false);
  });

  it("is lossless on both sides", () => {
    const rand = mulberry32(1234);
    for (let i = 0; i < 250; i++) {
      const oldText = randomText(rand);
      const newText = randomText(rand);
      const spans = diffTokens(oldText, newText);
      expect(oldTextOf(spans)).toBe(oldText);
      expect(newTextOf(spans)).toBe(newText);
    }
  });

  it("handles empty sides", () => {
    expect(diffTokens("", "new value")).toEqual([
      { kind: "added", text: "new value" },
    ]);
    expect(diffTokens("old", "")).toEqual([{ kind: "removed", text: "old" }]);
    expect(diffTokens("", "")).toEqual([]);
  });
});

describe("contentText", () => {
  it("joins value lists", () => {
    expect(contentText(["actor", "producer"])).toBe("actor, producer");
  });

  it("renders row objects", () => {
    expect(contentText({ key: "born", values: ["1950"] })).toBe("born: 1950");
  });

  it("tolerates null", () => {
    expect(contentText(null)).toBe("");
  });
});
