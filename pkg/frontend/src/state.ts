// View state and its pure reducers. Every change of mode originates from a
// backend status or assessment document; submissions only advance the pair
// cursor optimistically and are reconciled by the backend echo.

import type { AssessmentDoc, OutboundEvent, Phase, StatusDoc } from "./protocol.js";

export type Mode = "no_fault" | "fault" | "rating" | "report";

export interface ViewState {
  connected: boolean;
  reconnectInSeconds: number | null;
  phase: Phase;
  statusLabel: string | null;
  resolvedHint: boolean;
  assessment: AssessmentDoc | null;
  pairIndex: number;
  pendingSubmissions: number;
  assessmentsSeen: number;
}

export const initialView: ViewState = {
  connected: false,
  reconnectInSeconds: null,
  phase: "FIRST_RUN",
  statusLabel: null,
  resolvedHint: false,
  assessment: null,
  pairIndex: 0,
  pendingSubmissions: 0,
  assessmentsSeen: 0,
};

export function modeOf(view: ViewState): Mode {
  switch (view.phase) {
    case "AWAIT_ACK":
    case "AWAIT_RESOLUTION":
      return "fault";
    case "AWAIT_RATING":
      return "rating";
    case "AWAIT_REPORT":
      return "report";
    default:
      return "no_fault";
  }
}

export function applyStatus(view: ViewState, status: StatusDoc): ViewState {
  const leftEpisode = status.phase === "MONITOR" || status.phase === "FIRST_RUN";
  return {
    ...view,
    phase: status.phase,
    statusLabel: status.active_label,
    resolvedHint: status.resolved_hint,
    pairIndex: status.pair_index,
    assessment: leftEpisode ? null : view.assessment,
  };
}

export function applyAssessment(view: ViewState, assessment: AssessmentDoc): ViewState {
  return {
    ...view,
    assessment,
    pairIndex: assessment.pair_index,
    assessmentsSeen: view.assessmentsSeen + 1,
  };
}

export function applyConnection(
  view: ViewState,
  connected: boolean,
  reconnectInSeconds: number | null = null,
): ViewState {
  return { ...view, connected, reconnectInSeconds };
}

export function applyPending(view: ViewState, pendingSubmissions: number): ViewState {
  return { ...view, pendingSubmissions };
}

// Optimistic advance; the backend's status echo remains authoritative.
export function applyOptimistic(view: ViewState, event: OutboundEvent): ViewState {
  if (event.kind === "next" && view.assessment) {
    const last = view.assessment.pairs.length;
    return { ...view, pairIndex: Math.min(view.pairIndex + 1, last) };
  }
  return view;
}

// Which submissions are legal right now; render disables everything else.
export function allowedActions(view: ViewState): OutboundEvent["kind"][] {
  switch (view.phase) {
    case "AWAIT_ACK":
      return ["ack"];
    case "AWAIT_RESOLUTION":
      return ["next", "solved"];
    case "AWAIT_RATING":
      return ["rating"];
    case "AWAIT_REPORT":
      return ["report"];
    default:
      return [];
  }
}
