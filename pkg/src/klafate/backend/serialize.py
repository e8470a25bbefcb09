"""Single source of truth for every wire and file schema.

The pub/sub payloads, the HTTP bodies, the CLI ``--format json`` output and
the event-log lines all go through these functions, so the schemas cannot
drift apart. Canonical JSON is compact, key-sorted UTF-8, making serialized
state comparable byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

from ..errors import ProtocolError
from ..knowledge import Assessment
from ..weights import RuleWeight

USER_EVENT_KINDS = ("ack", "next", "solved", "rating", "report")


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def assessment_to_payload(assessment: Assessment, pair_index: int = 0) -> dict:
    return {
        "fm_id": assessment.active_label,
        "label": assessment.label_text,
        "effect": assessment.effect,
        "pairs": [
            {"cause": cause, "recommendation": recommendation}
            for cause, recommendation in assessment.pairs
        ],
        "pair_index": pair_index,
        "w_r": assessment.w_r,
        "evidence": list(assessment.evidence.masses) if assessment.evidence else [],
        "uncertainty": assessment.uncertainty,
        "detected_at": assessment.detected_at,
    }


@dataclass(frozen=True)
class UserEvent:
    """Operator action flowing from the console to the backend."""

    kind: str
    stars: Optional[int] = None
    text: Optional[str] = None
    ts: float = 0.0
    display_ts: Optional[float] = None  # client render time, same clock as backend only in loopback

    def __post_init__(self):
        if self.kind not in USER_EVENT_KINDS:
            raise ProtocolError(
                f"unknown event kind {self.kind!r}; expected one of {USER_EVENT_KINDS}"
            )


def event_to_payload(event: UserEvent) -> dict:
    payload: dict = {"kind": event.kind, "ts": event.ts}
    if event.stars is not None:
        payload["stars"] = event.stars
    if event.text is not None:
        payload["text"] = event.text
    if event.display_ts is not None:
        payload["display_ts"] = event.display_ts
    return payload


def payload_to_event(payload: Mapping) -> UserEvent:
    if not isinstance(payload, Mapping):
        raise ProtocolError(f"event payload must be an object, got {type(payload).__name__}")
    kind = payload.get("kind")
    if not isinstance(kind, str):
        raise ProtocolError("event payload needs a string 'kind'")
    stars = payload.get("stars")
    if stars is not None and (isinstance(stars, bool) or not isinstance(stars, int)):
        raise ProtocolError(f"'stars' must be an integer, got {stars!r}")
    text = payload.get("text")
    if text is not None and not isinstance(text, str):
        raise ProtocolError(f"'text' must be a string, got {text!r}")
    return UserEvent(
        kind=kind,
        stars=stars,
        text=text,
        ts=float(payload.get("ts", 0.0)),
        display_ts=payload.get("display_ts"),
    )


def status_payload(
    phase: str,
    active_label: Optional[str],
    pair_index: int,
    ts: float,
    resolved_hint: bool = False,
) -> dict:
    return {
        "kind": "status",
        "phase": phase,
        "active_label": active_label,
        "pair_index": pair_index,
        "resolved_hint": resolved_hint,
        "ts": ts,
    }


def rule_weight_to_jsonable(weight: RuleWeight) -> dict:
    return {
        "rule_id": weight.rule_id,
        "current": weight.current,
        "accumulated": weight.accumulated,
        "criteria": dict(weight.criteria),
        "history": [[ts, w] for ts, w in weight.history],
    }


def weights_to_jsonable(weights: Mapping[str, RuleWeight]) -> dict:
    return {rule_id: rule_weight_to_jsonable(w) for rule_id, w in weights.items()}


def canonical_weights_json(weights: Mapping[str, RuleWeight]) -> bytes:
    return dumps_canonical(weights_to_jsonable(weights)).encode("utf-8")
