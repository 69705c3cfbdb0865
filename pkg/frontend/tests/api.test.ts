import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";

interface Recorded {
  input: string;
  init?: RequestInit;
}

function fakeFetch(status: number, payload: unknown): { fetch: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetchImpl: FetchLike = async (input, init) => {
    calls.push({ input, init });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchImpl, calls };
}

describe("ApiClient", () => {
  it("posts chat messages with the session id", async () => {
    const reply = { answer: "ok", refused: false, retrieved: [], latency: 0.1 };
    const { fetch, calls } = fakeFetch(200, reply);
    const client = new ApiClient(fetch);
    const result = await client.sendChat("session:x", "hello?");
    expect(result).toEqual(reply);
    expect(calls[0].input).toBe("/api/chat");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      session_id: "session:x",
      text: "hello?",
    });
  });

  it("unwraps list envelopes", async () => {
    const contacts = [{ contact_id: "c", first_seen: 0, last_seen: 0, message_count: 1 }];
    const client = new ApiClient(fakeFetch(200, { contacts }).fetch);
    expect(await client.listContacts()).toEqual(contacts);

    const reports = [{ report_id: "r1", created_at: 5 }];
    const reportClient = new ApiClient(fakeFetch(200, { reports }).fetch);
    expect(await reportClient.listReports()).toEqual(reports);
  });

  it("url-encodes contact and report ids", async () => {
    const { fetch, calls } = fakeFetch(200, { turns: [] });
    await new ApiClient(fetch).listTurns("session:a/b c");
    expect(calls[0].input).toBe("/api/conversations?contact=session%3Aa%2Fb%20c");
  });

  it("raises ApiError with the HTTP status on failures", async () => {
    const client = new ApiClient(fakeFetch(404, { detail: "missing" }).fetch);
    await expect(client.report("nope")).rejects.toThrowError(ApiError);
    await expect(client.report("nope")).rejects.toMatchObject({ status: 404 });
  });

  it("propagates network failures untouched", async () => {
    const failing: FetchLike = async () => {
      throw new TypeError("network down");
    };
    await expect(new ApiClient(failing).latency()).rejects.toThrow("network down");
  });
});
