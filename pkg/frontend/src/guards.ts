// Client-side decision guards. These must never allow a transition the
// service would reject: accepting requires a citation URL, and decided
// records cannot be re-decided.

import type { ProposalRecord } from "./api.js";

export function citationUrlValid(url: string): boolean {
  const trimmed = url.trim();
  if (!trimmed) return false;
  return /^https?:\/\/\S+\.\S+/.test(trimmed);
}

export function canSubmitDecision(
  record: Pick<ProposalRecord, "status">,
  decision: "accept" | "reject",
  citationUrl: string,
): boolean {
  if (record.status !== "pending") return false;
  if (decision === "accept") return citationUrlValid(citationUrl);
  return true;
}

export function blockedReason(
  record: Pick<ProposalRecord, "status">,
  decision: "accept" | "reject",
  citationUrl: string,
): string | null {
  if (record.status !== "pending") return `already ${record.status}`;
  if (decision === "accept" && !citationUrlValid(citationUrl)) {
    return "a citation URL is required to accept";
  }
  return null;
}
