// Browser bootstrap: one event stream in, one submission queue out, keyboard
// shortcuts N / S / A / 1-5, and full re-render on every state change.

import { EventStreamClient, SubmissionQueue } from "./client.js";
import type { OutboundEvent } from "./protocol.js";
import { renderView } from "./render.js";
import {
  applyAssessment,
  applyConnection,
  applyOptimistic,
  applyPending,
  applyStatus,
  allowedActions,
  initialView,
  type ViewState,
} from "./state.js";

const baseUrl = window.location.origin;
const root = document.getElementById("app")!;

let view: ViewState = initialView;

function update(next: ViewState): void {
  view = next;
  root.innerHTML = renderView(view);
}

const queue = new SubmissionQueue(baseUrl, (pending) => update(applyPending(view, pending)));

const stream = new EventStreamClient(baseUrl, {
  onStatus: (status) => update(applyStatus(view, status)),
  onAssessment: (assessment) => {
    update(applyAssessment(view, assessment));
    void queueDisplayProbe();
  },
  onConnection: (connected, reconnectIn) => update(applyConnection(view, connected, reconnectIn)),
});

let displayTs: number | null = null;

async function queueDisplayProbe(): Promise<void> {
  // remember when the assessment hit the screen; sent with the ack
  displayTs = Date.now() / 1000;
}

function submit(kind: OutboundEvent["kind"], extra: Partial<OutboundEvent> = {}): void {
  if (!allowedActions(view).includes(kind)) return;
  const event: OutboundEvent = { kind, ts: Date.now() / 1000, ...extra };
  if (kind === "ack" && displayTs !== null) event.display_ts = displayTs;
  update(applyOptimistic(view, event));
  void queue.submit(event);
}

root.addEventListener("click", (raw) => {
  const target = (raw.target as HTMLElement).closest("button[data-action]");
  if (!target) return;
  const action = target.getAttribute("data-action") as OutboundEvent["kind"];
  if (action === "rating") {
    submit("rating", { stars: Number(target.getAttribute("data-stars")) });
  } else if (action === "report") {
    const text = (document.getElementById("report-text") as HTMLTextAreaElement | null)?.value;
    if (text && text.trim()) submit("report", { text: text.trim() });
  } else {
    submit(action);
  }
});

window.addEventListener("keydown", (key) => {
  if (key.target instanceof HTMLTextAreaElement) return;
  if (key.key === "n" || key.key === "N") submit("next");
  else if (key.key === "s" || key.key === "S") submit("solved");
  else if (key.key === "a" || key.key === "A") submit("ack");
  else if (key.key >= "1" && key.key <= "5") submit("rating", { stars: Number(key.key) });
});

update(initialView);
stream.start();
