// Pure HTML rendering of a ViewState. No DOM access here, so the whole
// surface is testable in node; main.ts assigns the result to innerHTML.

import type { AssessmentDoc } from "./protocol.js";
import { allowedActions, modeOf, type ViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

// The dominant mass belongs to the fired rule (its raw spread mass is at
// least 0.9); we pick it for display rather than recomputing anything.
export function confidencePercent(assessment: AssessmentDoc): string {
  if (!assessment.evidence.length) return "-";
  return `${Math.round(Math.max(...assessment.evidence) * 100)}%`;
}

export function uncertaintyPercent(assessment: AssessmentDoc): string {
  if (assessment.uncertainty === null) return "-";
  return `${Math.round(assessment.uncertainty * 100)}%`;
}

export function evidenceBar(assessment: AssessmentDoc): string {
  if (assessment.uncertainty === null) return "";
  const segments = assessment.evidence
    .map(
      (mass, index) =>
        `<span class="seg mass" data-index="${index}" style="width:${(mass * 100).toFixed(2)}%"></span>`,
    )
    .join("");
  const u = `<span class="seg uncertainty" style="width:${(assessment.uncertainty * 100).toFixed(2)}%"></span>`;
  return `<div class="evidence-bar" role="img" aria-label="evidence masses and uncertainty">${segments}${u}</div>`;
}

function button(action: string, label: string, enabled: boolean, extra = ""): string {
  const disabled = enabled ? "" : " disabled";
  return `<button data-action="${action}"${extra}${disabled}>${label}</button>`;
}

function connectionBanner(view: ViewState): string {
  if (view.connected) return "";
  const countdown =
    view.reconnectInSeconds !== null ? ` reconnecting in ${view.reconnectInSeconds}s` : "";
  return `<div class="banner disconnected">backend unreachable,${countdown}</div>`;
}

function pendingBadge(view: ViewState): string {
  if (view.pendingSubmissions === 0) return "";
  return `<span class="pending">${view.pendingSubmissions} pending</span>`;
}

function noFaultScreen(view: ViewState): string {
  const label = view.statusLabel
    ? `<p class="status-label">status: ${escapeHtml(view.statusLabel)}</p>`
    : "";
  return `<section class="screen no-fault"><h1>no fault</h1>${label}</section>`;
}

function faultScreen(view: ViewState): string {
  const a = view.assessment;
  if (!a) return `<section class="screen fault"><h1>fault</h1><p>waiting for details…</p></section>`;
  const actions = allowedActions(view);
  const pairCount = a.pairs.length;
  const pair = a.pairs[Math.min(view.pairIndex, Math.max(pairCount - 1, 0))];
  const pairBlock = pair
    ? `<div class="pair"><p class="counter">recommendation ${Math.min(view.pairIndex + 1, pairCount)} of ${pairCount}</p>
       <p class="cause">cause: ${escapeHtml(pair.cause)}</p>
       <p class="recommendation">try: ${escapeHtml(pair.recommendation)}</p></div>`
    : `<div class="pair"><p>no diagnosis on file</p></div>`;
  const hint = view.resolvedHint
    ? `<p class="resolved-hint">plant data looks normal again, confirm solved?</p>`
    : "";
  return `<section class="screen fault">
    <h1>${escapeHtml(a.label)}</h1>
    <p class="effect">${escapeHtml(a.effect)}</p>
    <p class="confidence">confidence ${confidencePercent(a)}</p>
    <p class="uncertainty">uncertainty ${uncertaintyPercent(a)}</p>
    ${evidenceBar(a)}
    ${pairBlock}
    ${hint}
    <div class="controls">
      ${button("ack", "Acknowledge (A)", actions.includes("ack"))}
      ${button("next", "Next (N)", actions.includes("next"))}
      ${button("solved", "Solved (S)", actions.includes("solved"))}
    </div>
  </section>`;
}

function ratingScreen(view: ViewState): string {
  const a = view.assessment;
  const summary = a
    ? `<p class="summary">${escapeHtml(a.label)} resolved, rate this assessment</p>`
    : "";
  const stars = [1, 2, 3, 4, 5]
    .map((n) => button("rating", "★".repeat(n), true, ` data-stars="${n}"`))
    .join("");
  return `<section class="screen rating"><h1>user rating</h1>${summary}
    <div class="stars">${stars}</div>
    <p class="hint">keys 1-5</p></section>`;
}

function reportScreen(view: ViewState): string {
  const a = view.assessment;
  const context = a
    ? `<p class="summary">no diagnosis left for ${escapeHtml(a.label)}, please describe the problem</p>`
    : `<p class="summary">please describe the problem</p>`;
  return `<section class="screen report"><h1>error report</h1>${context}
    <textarea id="report-text" rows="4" placeholder="what did you observe?"></textarea>
    ${button("report", "Submit report", true)}</section>`;
}

export function renderView(view: ViewState): string {
  const mode = modeOf(view);
  const body =
    mode === "no_fault"
      ? noFaultScreen(view)
      : mode === "fault"
        ? faultScreen(view)
        : mode === "rating"
          ? ratingScreen(view)
          : reportScreen(view);
  return `${connectionBanner(view)}${body}${pendingBadge(view)}`;
}
