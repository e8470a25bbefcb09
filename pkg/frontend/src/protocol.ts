// Wire types, mirroring docs/protocol.md exactly. The console never computes
// assessment fields; it only displays what these documents carry.

export type Phase =
  | "FIRST_RUN"
  | "MONITOR"
  | "AWAIT_ACK"
  | "AWAIT_RESOLUTION"
  | "AWAIT_RATING"
  | "AWAIT_REPORT";

export interface PairDoc {
  cause: string;
  recommendation: string;
}

export interface AssessmentDoc {
  fm_id: string;
  label: string;
  effect: string;
  pairs: PairDoc[];
  pair_index: number;
  w_r: number | null;
  evidence: number[];
  uncertainty: number | null;
  detected_at: number;
}

export interface StatusDoc {
  kind: "status";
  phase: Phase;
  active_label: string | null;
  pair_index: number;
  resolved_hint: boolean;
  ts: number;
}

export type OutboundKind = "ack" | "next" | "solved" | "rating" | "report";

export interface OutboundEvent {
  kind: OutboundKind;
  stars?: number;
  text?: string;
  ts: number;
  display_ts?: number;
}

export interface EventReply {
  ok: boolean;
  phase?: Phase;
  pair_index?: number;
  error?: string;
}
