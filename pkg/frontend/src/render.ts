/** Pure HTML-string renderers.
 *
 * Keeping these free of DOM access means the snapshot tests can assert,
 * in plain node, that every number shown on the dashboard is byte-equal
 * to a value from the API payload.
 */

import type { TranscriptEntry } from "./state.js";
import type {
  ContactSummary,
  GradeSection,
  LatencyStats,
  ReportDoc,
  ReportListing,
  TamRow,
  TurnRecord,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const GRADE_TITLES: Record<string, string> = {
  perfect: "Perfect",
  sufficient: "Sufficient",
  not_sufficient: "Not Sufficient",
  wrong: "Wrong",
  i_dont_know: "I don't know",
};

const CONSTRUCT_TITLES: Record<string, string> = {
  perceived_usefulness: "Perceived Usefulness",
  ease_of_use: "Ease of Use",
  intention_to_use: "Intention to Use",
};

// ---------------------------------------------------------------- chat

export function renderTranscript(transcript: TranscriptEntry[], pending: boolean): string {
  if (transcript.length === 0 && !pending) {
    return '<p class="empty">No messages yet. Ask something about safe water, sanitation or hygiene.</p>';
  }
  const bubbles = transcript.map((entry) =>
    entry.role === "user" ? renderUserBubble(entry) : renderBotBubble(entry),
  );
  if (pending) {
    bubbles.push('<div class="bubble bot pending">…</div>');
  }
  return bubbles.join("\n");
}

function renderUserBubble(entry: TranscriptEntry): string {
  return `<div class="bubble user">${escapeHtml(entry.text)}</div>`;
}

export function renderBotBubble(entry: TranscriptEntry): string {
  const classes = entry.refused ? "bubble bot declined" : "bubble bot";
  const parts = [`<div class="${classes}">`, `<p>${escapeHtml(entry.text)}</p>`];
  const retrieved = entry.retrieved ?? [];
  if (retrieved.length > 0) {
    const chips = retrieved
      .map((chunk) => `<span class="chip">s${chunk.chunk_id} · ${chunk.score.toFixed(3)}</span>`)
      .join(" ");
    const sources = retrieved
      .map(
        (chunk) =>
          `<li><strong>s${chunk.chunk_id}</strong> (score ${chunk.score.toFixed(3)})` +
          `<blockquote>${escapeHtml(chunk.text)}</blockquote></li>`,
      )
      .join("");
    parts.push(
      `<details><summary>${chips}</summary><ul class="sources">${sources}</ul></details>`,
    );
  }
  if (entry.latency !== undefined) {
    parts.push(`<span class="latency">${(entry.latency * 1000).toFixed(1)} ms</span>`);
  }
  parts.push("</div>");
  return parts.join("");
}

// ---------------------------------------------------------------- conversations

export function renderContacts(contacts: ContactSummary[]): string {
  if (contacts.length === 0) {
    return '<p class="empty">No conversations recorded yet.</p>';
  }
  const rows = contacts
    .map(
      (contact) =>
        `<tr><td><a href="#" data-contact="${escapeHtml(contact.contact_id)}">` +
        `${escapeHtml(contact.contact_id)}</a></td>` +
        `<td>${contact.message_count}</td>` +
        `<td>${new Date(contact.last_seen * 1000).toISOString()}</td></tr>`,
    )
    .join("");
  return (
    "<table><thead><tr><th>Contact</th><th>Messages</th><th>Last seen</th></tr></thead>" +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderTurns(contact: string, turns: TurnRecord[]): string {
  const items = turns
    .map((turn) => {
      const refused = turn.answer.refused ? ' <span class="tag declined-tag">declined</span>' : "";
      return (
        `<li><p class="inbound">${escapeHtml(turn.inbound_text)}</p>` +
        `<p class="outbound">${escapeHtml(turn.answer.text)}${refused}</p></li>`
      );
    })
    .join("");
  return `<h3>${escapeHtml(contact)}</h3><ul class="turns">${items}</ul>`;
}

// ---------------------------------------------------------------- dashboard

export function renderLatency(stats: LatencyStats): string {
  if (stats.count === 0 || stats.mean === null) {
    return '<p class="empty">No answered turns yet.</p>';
  }
  return (
    `<p class="latency-line">${stats.mean} s (min: ${stats.min}, max: ${stats.max})` +
    ` over ${stats.count} turns</p>`
  );
}

export function renderReportList(reports: ReportListing[]): string {
  if (reports.length === 0) {
    return '<p class="empty">No evaluation reports stored. Run `washbot eval report --data-dir …` to publish one.</p>';
  }
  const items = reports
    .map(
      (report) =>
        `<li><a href="#" data-report="${escapeHtml(report.report_id)}">` +
        `${escapeHtml(report.report_id)}</a></li>`,
    )
    .join("");
  return `<ul class="report-list">${items}</ul>`;
}

export function renderGradeBars(grades: GradeSection): string {
  const rows = Object.entries(grades.counts)
    .map(([grade, count]) => {
      const share = grades.proportions[grade] ?? 0;
      const width = (share * 100).toFixed(1);
      return (
        `<div class="bar-row"><span class="bar-label">${GRADE_TITLES[grade] ?? grade}</span>` +
        `<div class="bar" style="width:${width}%"></div>` +
        `<span class="bar-value">${count}</span></div>`
      );
    })
    .join("");
  const defaults =
    grades.defaults_filled !== undefined
      ? `<p class="note">Missing cells defaulted: ${grades.defaults_filled}</p>`
      : "";
  return (
    `<div class="bars">${rows}</div>` +
    `<p class="headline">Perfect + Sufficient: <strong>${grades.perfect_or_sufficient.percent}</strong>` +
    ` (${grades.perfect_or_sufficient.count} of ${grades.total})` +
    ` · Wrong: <strong>${grades.wrong_percent}</strong></p>` +
    defaults
  );
}

export function renderExpertMatrix(perExpert: Record<string, Record<string, number>>): string {
  const gradeKeys = Object.keys(GRADE_TITLES);
  const header = gradeKeys.map((grade) => `<th>${GRADE_TITLES[grade]}</th>`).join("");
  const rows = Object.entries(perExpert)
    .map(([expert, counts]) => {
      const cells = gradeKeys.map((grade) => `<td>${counts[grade] ?? 0}</td>`).join("");
      return `<tr><td>${escapeHtml(expert)}</td>${cells}</tr>`;
    })
    .join("");
  return (
    `<table class="matrix"><thead><tr><th>Expert</th>${header}</tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderTamTable(rows: TamRow[]): string {
  const body = rows
    .map((row) => {
      const alpha = row.alpha === null ? "n/a" : row.alpha.toFixed(2);
      let correlation: string;
      if (row.construct === "intention_to_use") {
        correlation = "-";
      } else if (row.r_with_intention === null) {
        correlation = "n/a";
      } else {
        const stars = row.stars
          ? `<span class="stars" title="p = ${row.p_value}">${row.stars}</span>`
          : "";
        correlation = `${row.r_with_intention.toFixed(2)}${stars}`;
      }
      return (
        `<tr><td>${CONSTRUCT_TITLES[row.construct] ?? row.construct}</td>` +
        `<td>${row.mean.toFixed(2)}</td><td>${row.sd.toFixed(2)}</td>` +
        `<td>${alpha}</td><td>${correlation}</td></tr>`
      );
    })
    .join("");
  return (
    '<table class="tam"><thead><tr><th>Construct</th><th>Mean</th><th>SD</th>' +
    "<th>Cronbach's alpha</th><th>r with Intention to Use</th></tr></thead>" +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderReport(doc: ReportDoc): string {
  const sections: string[] = [`<h3>${escapeHtml(doc.report_id)}</h3>`];
  if (doc.run) {
    const latency = doc.run.latency
      ? `<p class="latency-line">${doc.run.latency.mean} s (min: ${doc.run.latency.min}, max: ${doc.run.latency.max})</p>`
      : "";
    sections.push(
      `<section><h4>Batch run</h4><p>${doc.run.answered} of ${doc.run.questions} answered, ` +
        `${doc.run.refused} refused, ${doc.run.failed} failed.</p>${latency}</section>`,
    );
  }
  if (doc.grades) {
    sections.push(`<section><h4>Grade proportions</h4>${renderGradeBars(doc.grades)}</section>`);
  }
  if (doc.per_expert) {
    sections.push(`<section><h4>Per-expert counts</h4>${renderExpertMatrix(doc.per_expert)}</section>`);
  }
  if (doc.tam && doc.tam.length > 0) {
    const note = doc.tam_sample_size_note
      ? `<p class="note">${escapeHtml(doc.tam_sample_size_note)}</p>`
      : "";
    sections.push(
      `<section><h4>Technology acceptance</h4>${renderTamTable(doc.tam)}${note}</section>`,
    );
  }
  return sections.join("\n");
}
