/**
 * Typed client for the voting service's JSON endpoints.
 *
 * Voting needs no credentials: the opaque session token handed out by
 * /next scopes exhibition cycles and vote matching, nothing more. Admin
 * calls carry the shared secret in a header, entered at runtime.
 */

export type VoteKind = "approve" | "disapprove" | "indifferent";

export interface NextProposal {
  proposal_id: string;
  text: string;
  session_token: string;
}

export interface RankingRow {
  proposal_id: string;
  alpha: number | null;
  gamma: number | null;
  eta: number;
  stderr_alpha: number | null;
  sampled: boolean;
  relevant: boolean;
  verdict: "approved" | "disapproved" | "clash" | "undetermined";
  prioritized: boolean;
}

export interface ProposalDetail {
  proposal_id: string;
  text: string;
  tally: { v_plus: number; v_minus: number; v_zero: number; eta: number };
  indexes: { alpha: number | null; gamma: number | null };
  interval: unknown;
  classification: {
    sampled: boolean;
    relevant: boolean;
    verdict: string;
    prioritized: boolean;
  };
}

export interface ThresholdSettings {
  alpha_bar: number;
  gamma_bar: number;
  eta_bar: number | null;
  fraction: number | null;
  dynamic: boolean;
}

export interface AnomalyFlag {
  ip: string;
  window_start: string;
  window_end: string;
  observed_rate: number;
  rule: string;
  affected_proposals: string[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  sessionToken: string | null = null;

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const headers: Record<string, string> = {
      ...(init.headers as Record<string, string> | undefined),
    };
    if (init.body !== undefined) headers["Content-Type"] = "application/json";
    if (this.sessionToken) headers["X-Session-Token"] = this.sessionToken;
    return this.fetchFn(this.baseUrl + path, { ...init, headers });
  }

  /** One random unseen proposal, or null when the pool is empty. */
  async fetchNext(): Promise<NextProposal | null> {
    const response = await this.request("/next");
    if (response.status === 404) return null;
    if (!response.ok) throw new ApiError(response.status, await response.text());
    const body = (await response.json()) as NextProposal;
    this.sessionToken = body.session_token;
    return body;
  }

  /**
   * One manifestation for an outstanding exhibition. A conflict (no
   * outstanding exhibition, or it was already answered) is an expected
   * outcome, not an error.
   */
  async castVote(proposalId: string, kind: VoteKind): Promise<"ok" | "conflict"> {
    const response = await this.request("/votes", {
      method: "POST",
      body: JSON.stringify({ proposal_id: proposalId, kind }),
    });
    if (response.status === 204) return "ok";
    if (response.status === 409) return "conflict";
    throw new ApiError(response.status, await response.text());
  }

  async submitProposal(text: string): Promise<string> {
    const response = await this.request("/proposals", {
      method: "POST",
      body: JSON.stringify({ text }),
    });
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return ((await response.json()) as { proposal_id: string }).proposal_id;
  }

  async fetchRanking(): Promise<RankingRow[]> {
    const response = await this.request("/ranking");
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as RankingRow[];
  }

  async fetchProposal(proposalId: string): Promise<ProposalDetail> {
    const response = await this.request(`/proposals/${proposalId}`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ProposalDetail;
  }

  private adminHeaders(token: string): Record<string, string> {
    return { "X-Admin-Token": token };
  }

  async getThresholds(adminToken: string): Promise<ThresholdSettings> {
    const response = await this.request("/admin/thresholds", {
      headers: this.adminHeaders(adminToken),
    });
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ThresholdSettings;
  }

  async putThresholds(
    adminToken: string,
    changes: Partial<ThresholdSettings>,
  ): Promise<ThresholdSettings> {
    const response = await this.request("/admin/thresholds", {
      method: "PUT",
      body: JSON.stringify(changes),
      headers: this.adminHeaders(adminToken),
    });
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return (await response.json()) as ThresholdSettings;
  }

  async getAnomalies(adminToken: string): Promise<AnomalyFlag[]> {
    const response = await this.request("/admin/anomalies", {
      headers: this.adminHeaders(adminToken),
    });
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return ((await response.json()) as { flags: AnomalyFlag[] }).flags;
  }
}
