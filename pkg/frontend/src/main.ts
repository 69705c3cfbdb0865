/** DOM glue: tabs, the chat form, and dashboard loading. */

import { ApiClient } from "./api.js";
import {
  beginSend,
  completeSend,
  loadSession,
  rollbackSend,
  type ChatSession,
} from "./state.js";
import {
  renderContacts,
  renderLatency,
  renderReport,
  renderReportList,
  renderTranscript,
  renderTurns,
} from "./render.js";

const api = new ApiClient();
let session: ChatSession = loadSession(window.localStorage);

const transcriptBox = document.getElementById("transcript") as HTMLDivElement;
const form = document.getElementById("chat-form") as HTMLFormElement;
const input = document.getElementById("chat-input") as HTMLInputElement;
const sendButton = document.getElementById("chat-send") as HTMLButtonElement;
const errorBanner = document.getElementById("error-banner") as HTMLDivElement;
const sessionLabel = document.getElementById("session-label") as HTMLSpanElement;

sessionLabel.textContent = session.sessionId;

function repaintChat(): void {
  transcriptBox.innerHTML = renderTranscript(session.transcript, session.pending);
  transcriptBox.scrollTop = transcriptBox.scrollHeight;
  input.disabled = session.pending;
  sendButton.disabled = session.pending;
}

function showError(message: string): void {
  errorBanner.textContent = `${message}. Your text is preserved; press send to retry.`;
  errorBanner.hidden = false;
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const text = input.value;
  if (!text.trim() || session.pending) {
    return;
  }
  errorBanner.hidden = true;
  session = beginSend(session, text);
  repaintChat();
  api
    .sendChat(session.sessionId, text)
    .then((reply) => {
      session = completeSend(session, reply);
      input.value = "";
    })
    .catch((error: unknown) => {
      session = rollbackSend(session);
      showError(error instanceof Error ? error.message : "request failed");
    })
    .finally(repaintChat);
});

// ---------------------------------------------------------------- tabs

const panels = Array.from(document.querySelectorAll<HTMLElement>("[data-panel]"));
const tabs = Array.from(document.querySelectorAll<HTMLButtonElement>("[data-tab]"));

function activate(name: string): void {
  for (const panel of panels) {
    panel.hidden = panel.dataset.panel !== name;
  }
  for (const tab of tabs) {
    tab.classList.toggle("active", tab.dataset.tab === name);
  }
  if (name === "conversations") {
    void loadConversations();
  }
  if (name === "dashboard") {
    void loadDashboard();
  }
}

for (const tab of tabs) {
  tab.addEventListener("click", () => activate(tab.dataset.tab as string));
}

// ---------------------------------------------------------------- conversations

const contactsBox = document.getElementById("contacts") as HTMLDivElement;
const turnsBox = document.getElementById("turns") as HTMLDivElement;

async function loadConversations(): Promise<void> {
  try {
    contactsBox.innerHTML = renderContacts(await api.listContacts());
    turnsBox.innerHTML = "";
    for (const link of contactsBox.querySelectorAll<HTMLAnchorElement>("[data-contact]")) {
      link.addEventListener("click", async (event) => {
        event.preventDefault();
        const contact = link.dataset.contact as string;
        turnsBox.innerHTML = renderTurns(contact, await api.listTurns(contact));
      });
    }
  } catch (error) {
    contactsBox.innerHTML = `<p class="error">${error instanceof Error ? error.message : error}</p>`;
  }
}

// ---------------------------------------------------------------- dashboard

const latencyBox = document.getElementById("latency") as HTMLDivElement;
const reportListBox = document.getElementById("report-list") as HTMLDivElement;
const reportBox = document.getElementById("report") as HTMLDivElement;

async function loadDashboard(): Promise<void> {
  try {
    latencyBox.innerHTML = renderLatency(await api.latency());
    const reports = await api.listReports();
    reportListBox.innerHTML = renderReportList(reports);
    reportBox.innerHTML = "";
    for (const link of reportListBox.querySelectorAll<HTMLAnchorElement>("[data-report]")) {
      link.addEventListener("click", async (event) => {
        event.preventDefault();
        reportBox.innerHTML = renderReport(await api.report(link.dataset.report as string));
      });
    }
    if (reports.length > 0) {
      reportBox.innerHTML = renderReport(await api.report(reports[reports.length - 1].report_id));
    }
  } catch (error) {
    latencyBox.innerHTML = `<p class="error">${error instanceof Error ? error.message : error}</p>`;
  }
}

activate("chat");
repaintChat();
