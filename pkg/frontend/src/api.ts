/** Thin client over the service's JSON API.
 *
 * The fetch implementation is injectable so tests can run without a
 * server; paths are relative, so the playground works wherever the
 * service mounts it.
 */

import type {
  ChatResponse,
  ContactSummary,
  LatencyStats,
  ReportDoc,
  ReportListing,
  TurnRecord,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, `${path} failed with HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  sendChat(sessionId: string, text: string): Promise<ChatResponse> {
    return this.request<ChatResponse>("/api/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, text }),
    });
  }

  async listContacts(): Promise<ContactSummary[]> {
    const payload = await this.request<{ contacts: ContactSummary[] }>("/api/conversations");
    return payload.contacts;
  }

  async listTurns(contact: string): Promise<TurnRecord[]> {
    const payload = await this.request<{ turns: TurnRecord[] }>(
      `/api/conversations?contact=${encodeURIComponent(contact)}`,
    );
    return payload.turns;
  }

  latency(): Promise<LatencyStats> {
    return this.request<LatencyStats>("/api/stats/latency");
  }

  async listReports(): Promise<ReportListing[]> {
    const payload = await this.request<{ reports: ReportListing[] }>("/api/eval/reports");
    return payload.reports;
  }

  report(reportId: string): Promise<ReportDoc> {
    return this.request<ReportDoc>(`/api/eval/reports/${encodeURIComponent(reportId)}`);
  }
}
