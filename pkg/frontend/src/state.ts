/** Chat session state: a strictly alternating transcript and a session id
 *  that survives page reloads.
 *
 * All transitions are pure so the alternation invariant can be tested
 * without a DOM: a user turn is appended optimistically when a send
 * starts, completed by the bot turn on success, and rolled back on
 * failure (the transcript must look untouched after an error).
 */

import type { ChatResponse, RetrievedChunk } from "./types.js";

export interface TranscriptEntry {
  role: "user" | "bot";
  text: string;
  refused?: boolean;
  retrieved?: RetrievedChunk[];
  latency?: number;
}

export interface ChatSession {
  sessionId: string;
  transcript: TranscriptEntry[];
  pending: boolean;
}

const SESSION_KEY = "washbot.playground.session_id";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

function newSessionId(): string {
  const raw =
    typeof crypto !== "undefined" && "randomUUID" in crypto
      ? crypto.randomUUID()
      : `${Date.now().toString(16)}-${Math.random().toString(16).slice(2, 10)}`;
  return `session:${raw}`;
}

export function loadSession(storage: StorageLike): ChatSession {
  let sessionId = storage.getItem(SESSION_KEY);
  if (!sessionId) {
    sessionId = newSessionId();
    storage.setItem(SESSION_KEY, sessionId);
  }
  return { sessionId, transcript: [], pending: false };
}

/** Optimistically append the user turn. Rejects empty text and overlapping sends. */
export function beginSend(session: ChatSession, text: string): ChatSession {
  const trimmed = text.trim();
  if (!trimmed) {
    throw new Error("cannot send empty text");
  }
  if (session.pending) {
    throw new Error("a send is already in flight");
  }
  return {
    ...session,
    pending: true,
    transcript: [...session.transcript, { role: "user", text: trimmed }],
  };
}

/** Append the bot turn for the reply that completes the pending send. */
export function completeSend(session: ChatSession, reply: ChatResponse): ChatSession {
  if (!session.pending) {
    throw new Error("no send in flight");
  }
  const bot: TranscriptEntry = {
    role: "bot",
    text: reply.answer,
    refused: reply.refused,
    retrieved: reply.retrieved,
    latency: reply.latency,
  };
  return { ...session, pending: false, transcript: [...session.transcript, bot] };
}

/** Failure path: drop the optimistic user turn, leaving the transcript unchanged. */
export function rollbackSend(session: ChatSession): ChatSession {
  if (!session.pending) {
    throw new Error("no send in flight");
  }
  return { ...session, pending: false, transcript: session.transcript.slice(0, -1) };
}

/** True iff the transcript strictly alternates user/bot starting with user. */
export function alternates(transcript: TranscriptEntry[]): boolean {
  return transcript.every((entry, index) => entry.role === (index % 2 === 0 ? "user" : "bot"));
}
