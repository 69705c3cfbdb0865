/** The secondary acceptance path: a chat round-trip against a fixture
 *  server renders user/bot bubbles with source chips, refusals get the
 *  declined style, and failures leave the transcript untouched. */

import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { renderTranscript } from "../src/render.js";
import { alternates, beginSend, completeSend, loadSession, rollbackSend } from "../src/state.js";
import type { ChatResponse } from "../src/types.js";

const FIXTURE_REPLIES: Record<string, ChatResponse> = {
  "How can I make water from a stream safe to drink?": {
    answer: "According to the guidance material: Boiling is the most reliable household treatment.",
    refused: false,
    retrieved: [
      { chunk_id: 1, score: 0.412, text: "Boiling is the most reliable household treatment." },
      { chunk_id: 0, score: 0.31, text: "Water from open sources is never safe untreated." },
    ],
    latency: 0.0041,
  },
  "galaxy spacecraft telescope measures quasar brightness": {
    answer: "Sorry, I can only answer questions about safe water, sanitation and hygiene.",
    refused: true,
    retrieved: [],
    latency: 0.0012,
  },
};

function fixtureServer(): FetchLike {
  return async (input, init) => {
    if (input === "/api/chat" && init?.method === "POST") {
      const { text } = JSON.parse(init.body as string) as { text: string };
      const reply = FIXTURE_REPLIES[text];
      if (reply) {
        return new Response(JSON.stringify(reply), { status: 200 });
      }
      return new Response(JSON.stringify({ detail: "unknown fixture" }), { status: 400 });
    }
    return new Response("{}", { status: 404 });
  };
}

function storage() {
  const data = new Map<string, string>();
  return {
    getItem: (key: string) => data.get(key) ?? null,
    setItem: (key: string, value: string) => void data.set(key, value),
  };
}

describe("chat round-trip against the fixture server", () => {
  it("renders user and bot bubbles with source chips", async () => {
    const client = new ApiClient(fixtureServer());
    let session = loadSession(storage());
    const question = "How can I make water from a stream safe to drink?";

    session = beginSend(session, question);
    session = completeSend(session, await client.sendChat(session.sessionId, question));

    const html = renderTranscript(session.transcript, session.pending);
    expect(html).toContain('class="bubble user"');
    expect(html).toContain("How can I make water from a stream safe to drink?");
    expect(html).toContain('class="bubble bot"');
    expect(html).toContain('<span class="chip">s1 · 0.412</span>');
    expect(html).toContain('<span class="chip">s0 · 0.310</span>');
    expect(html).not.toContain("declined");
    expect(alternates(session.transcript)).toBe(true);
  });

  it("renders the declined style for refusals", async () => {
    const client = new ApiClient(fixtureServer());
    let session = loadSession(storage());
    const question = "galaxy spacecraft telescope measures quasar brightness";

    session = beginSend(session, question);
    session = completeSend(session, await client.sendChat(session.sessionId, question));

    const html = renderTranscript(session.transcript, session.pending);
    expect(html).toContain('class="bubble bot declined"');
  });

  it("a failed request leaves the transcript unchanged", async () => {
    const failing: FetchLike = async () => {
      throw new TypeError("network down");
    };
    const client = new ApiClient(failing);
    let session = loadSession(storage());
    const before = session.transcript;

    session = beginSend(session, "anything at all");
    await expect(client.sendChat(session.sessionId, "anything at all")).rejects.toThrow();
    session = rollbackSend(session);

    expect(session.transcript).toEqual(before);
    expect(alternates(session.transcript)).toBe(true);
  });
});
