import { describe, expect, it } from "vitest";

import type { AssessmentDoc, StatusDoc } from "../src/protocol.js";
import {
  allowedActions,
  applyAssessment,
  applyConnection,
  applyOptimistic,
  applyStatus,
  initialView,
  modeOf,
} from "../src/state.js";

const assessment: AssessmentDoc = {
  fm_id: "LQ",
  label: "low_quality_status",
  effect: "dosing unstable",
  pairs: [
    { cause: "c1", recommendation: "r1" },
    { cause: "c2", recommendation: "r2" },
  ],
  pair_index: 0,
  w_r: 0.71,
  evidence: [0.7029, 0.00355, 0.00355],
  uncertainty: 0.29,
  detected_at: 12.0,
};

function status(phase: StatusDoc["phase"], overrides: Partial<StatusDoc> = {}): StatusDoc {
  return {
    kind: "status",
    phase,
    active_label: null,
    pair_index: 0,
    resolved_hint: false,
    ts: 0,
    ...overrides,
  };
}

describe("mode mapping", () => {
  it("maps phases onto the four screens", () => {
    expect(modeOf(applyStatus(initialView, status("MONITOR")))).toBe("no_fault");
    expect(modeOf(applyStatus(initialView, status("AWAIT_ACK")))).toBe("fault");
    expect(modeOf(applyStatus(initialView, status("AWAIT_RESOLUTION")))).toBe("fault");
    expect(modeOf(applyStatus(initialView, status("AWAIT_RATING")))).toBe("rating");
    expect(modeOf(applyStatus(initialView, status("AWAIT_REPORT")))).toBe("report");
  });
});

describe("assessment handling", () => {
  it("stores the backend document verbatim, no client-side computation", () => {
    const view = applyAssessment(initialView, assessment);
    expect(view.assessment).toBe(assessment);
    expect(view.pairIndex).toBe(0);
  });

  it("preserves backend ordering: the latest assessment wins", () => {
    const second = { ...assessment, fm_id: "LP", label: "low_production" };
    let view = applyAssessment(initialView, assessment);
    view = applyAssessment(view, second);
    expect(view.assessment?.fm_id).toBe("LP");
    expect(view.assessmentsSeen).toBe(2);
  });

  it("clears the assessment when the session returns to monitoring", () => {
    let view = applyAssessment(initialView, assessment);
    view = applyStatus(view, status("AWAIT_ACK", { active_label: "LQ" }));
    expect(view.assessment).not.toBeNull();
    view = applyStatus(view, status("MONITOR", { active_label: "NP" }));
    expect(view.assessment).toBeNull();
    expect(view.statusLabel).toBe("NP");
  });

  it("reconciles the pair cursor from backend status", () => {
    let view = applyAssessment(initialView, assessment);
    view = applyStatus(view, status("AWAIT_RESOLUTION", { pair_index: 1 }));
    expect(view.pairIndex).toBe(1);
  });
});

describe("optimistic advance", () => {
  it("advances next locally but never past the end", () => {
    let view = applyAssessment(initialView, assessment);
    view = applyStatus(view, status("AWAIT_RESOLUTION"));
    view = applyOptimistic(view, { kind: "next", ts: 0 });
    expect(view.pairIndex).toBe(1);
    view = applyOptimistic(view, { kind: "next", ts: 0 });
    view = applyOptimistic(view, { kind: "next", ts: 0 });
    expect(view.pairIndex).toBe(2); // == pairs.length, report territory
  });

  it("other events do not move the cursor", () => {
    let view = applyAssessment(initialView, assessment);
    view = applyOptimistic(view, { kind: "solved", ts: 0 });
    expect(view.pairIndex).toBe(0);
  });
});

describe("allowed actions", () => {
  it("matches the backend state machine", () => {
    expect(allowedActions(applyStatus(initialView, status("MONITOR")))).toEqual([]);
    expect(allowedActions(applyStatus(initialView, status("AWAIT_ACK")))).toEqual(["ack"]);
    expect(allowedActions(applyStatus(initialView, status("AWAIT_RESOLUTION")))).toEqual([
      "next",
      "solved",
    ]);
    expect(allowedActions(applyStatus(initialView, status("AWAIT_RATING")))).toEqual(["rating"]);
    expect(allowedActions(applyStatus(initialView, status("AWAIT_REPORT")))).toEqual(["report"]);
  });
});

describe("connection state", () => {
  it("tracks reconnect countdown", () => {
    let view = applyConnection(initialView, false, 2);
    expect(view.connected).toBe(false);
    expect(view.reconnectInSeconds).toBe(2);
    view = applyConnection(view, true);
    expect(view.connected).toBe(true);
    expect(view.reconnectInSeconds).toBeNull();
  });
});
