// Typed client for the review service. The UI talks to nothing else.

export interface Citation {
  url: string;
  note: string;
}

export interface Proposal {
  id: string;
  rule: string;
  type: string;
  direction: string;
  entity_id: string;
  src_row: number | null;
  tgt_row: number | null;
  old: unknown;
  new: unknown;
  evidence: Record<string, unknown>;
}

export interface ProposalRecord {
  proposal: Proposal;
  status: "pending" | "accepted" | "rejected";
  citation: Citation | null;
  reviewer: string;
  created_at: string;
  decided_at: string | null;
  description: string;
}

export interface ProposalPage {
  items: ProposalRecord[];
  total: number;
  page: number;
  page_size: number;
}

export interface StatsBucket {
  total: number;
  accepted: number;
  rejected: number;
  pending: number;
  rate: number | null;
}

export interface AcceptanceStats {
  by_type: Record<string, StatsBucket>;
  by_direction: Record<string, StatsBucket>;
  total: StatsBucket;
}

export interface QueueFilter {
  status?: string;
  rule?: string;
  direction?: string;
  page?: number;
  page_size?: number;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

export function buildQuery(filter: QueueFilter): string {
  const params = new URLSearchParams();
  for (const key of ["status", "rule", "direction"] as const) {
    const value = filter[key];
    if (value) params.set(key, value);
  }
  if (filter.page) params.set("page", String(filter.page));
  if (filter.page_size) params.set("page_size", String(filter.page_size));
  const text = params.toString();
  return text ? `?${text}` : "";
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch (err) {
    throw new ApiError(0, "service unreachable");
  }
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export function listProposals(filter: QueueFilter): Promise<ProposalPage> {
  return request<ProposalPage>(`proposals${buildQuery(filter)}`);
}

export function getProposal(id: string): Promise<ProposalRecord> {
  return request<ProposalRecord>(`proposals/${encodeURIComponent(id)}`);
}

export function decisionBody(
  decision: "accept" | "reject",
  reviewer: string,
  citationUrl: string,
  citationNote = "",
): Record<string, unknown> {
  const body: Record<string, unknown> = { decision, reviewer };
  if (citationUrl.trim()) {
    body.citation = { url: citationUrl.trim(), note: citationNote };
  }
  return body;
}

export function decide(
  id: string,
  decision: "accept" | "reject",
  reviewer: string,
  citationUrl: string,
  citationNote = "",
): Promise<ProposalRecord> {
  return request<ProposalRecord>(
    `proposals/${encodeURIComponent(id)}/decision`,
    {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decisionBody(decision, reviewer, citationUrl, citationNote)),
    },
  );
}

export function fetchStats(): Promise<AcceptanceStats> {
  return request<AcceptanceStats>("stats");
}
