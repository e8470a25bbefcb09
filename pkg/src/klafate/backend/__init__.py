"""Operational service: pub/sub bus, event store, session machine, HTTP surface."""

from .bus import TOPIC_ASSESSMENT, TOPIC_EVENT_PREFIX, TOPIC_STATUS, MessageBus, event_topic
from .serialize import (
    UserEvent,
    assessment_to_payload,
    canonical_weights_json,
    dumps_canonical,
    event_to_payload,
    payload_to_event,
    status_payload,
    weights_to_jsonable,
)
from .service import Backend
from .session import LatencyProbes, Phase, Session, measure_latency
from .store import EventRecord, EventStore, load_records, replay_weights

__all__ = [
    "Backend",
    "EventRecord",
    "EventStore",
    "LatencyProbes",
    "MessageBus",
    "Phase",
    "Session",
    "TOPIC_ASSESSMENT",
    "TOPIC_EVENT_PREFIX",
    "TOPIC_STATUS",
    "UserEvent",
    "assessment_to_payload",
    "canonical_weights_json",
    "dumps_canonical",
    "event_to_payload",
    "event_topic",
    "load_records",
    "measure_latency",
    "payload_to_event",
    "replay_weights",
    "status_payload",
    "weights_to_jsonable",
]
