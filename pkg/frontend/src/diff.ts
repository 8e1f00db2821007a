// Token-level diff between the old and new content of a proposal.
//
// Lossless by construction: concatenating the text of all spans that are not
// "added" reproduces the old string exactly, and skipping "removed" spans
// reproduces the new string. Whitespace is kept as its own tokens so nothing
// is ever normalized away.

export type SpanKind = "same" | "removed" | "added";

export interface DiffSpan {
  kind: SpanKind;
  text: string;
}

function tokenize(text: string): string[] {
  // split on whitespace boundaries, keeping the whitespace runs
  return text.split(/(\s+)/).filter((t) => t.length > 0);
}

export function diffTokens(oldText: string, newText: string): DiffSpan[] {
  const a = tokenize(oldText);
  const b = tokenize(newText);
  // longest common subsequence table
  const m = a.length;
  const n = b.length;
  const lcs: number[][] = Array.from({ length: m + 1 }, () =>
    new Array(n + 1).fill(0),
  );
  for (let i = m - 1; i >= 0; i--) {
    for (let j = n - 1; j >= 0; j--) {
      lcs[i][j] =
        a[i] === b[j]
          ? lcs[i + 1][j + 1] + 1
          : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const spans: DiffSpan[] = [];
  const push = (kind: SpanKind, text: string) => {
    if (!text) return;
    const last = spans[spans.length - 1];
    if (last && last.kind === kind) {
      last.text += text;
    } else {
      spans.push({ kind, text });
    }
  };
  let i = 0;
  let j = 0;
  while (i < m && j < n) {
    if (a[i] === b[j]) {
      push("same", a[i]);
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      push("removed", a[i]);
      i++;
    } else {
      push("added", b[j]);
      j++;
    }
  }
  while (i < m) push("removed", a[i++]);
  while (j < n) push("added", b[j++]);
  return spans;
}

export function oldTextOf(spans: DiffSpan[]): string {
  return spans
    .filter((s) => s.kind !== "added")
    .map((s) => s.text)
    .join("");
}

export function newTextOf(spans: DiffSpan[]): string {
  return spans
    .filter((s) => s.kind !== "removed")
    .map((s) => s.text)
    .join("");
}

// Proposal content can be a value list or a whole row object.
export function contentText(content: unknown): string {
  if (content == null) return "";
  if (Array.isArray(content)) return content.join(", ");
  if (typeof content === "object") {
    const row = content as { key?: string; values?: string[] };
    const values = (row.values ?? []).join(", ");
    return row.key ? `${row.key}: ${values}` : values;
  }
  return String(content);
}
