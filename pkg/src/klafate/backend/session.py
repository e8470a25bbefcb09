"""Operator session: one fault episode at a time, driven by a strict state machine.

Phases::

    FIRST_RUN -> MONITOR -> AWAIT_ACK -> AWAIT_RESOLUTION -> AWAIT_RATING -> MONITOR
                                |             |                     (rating: w_k=1.0)
                                |             +-> AWAIT_REPORT -> MONITOR
                                +-> AWAIT_REPORT   (pairs exhausted or none; report: w_k=0.0)

Any event that is not legal in the current phase raises ProtocolError and
leaves the session untouched. Weights change exactly once per episode, on
rating or on report.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ProtocolError
from ..knowledge import Assessment
from ..weights import (
    KPI_CRITERION,
    PANEL_CRITERION,
    USER_CRITERION,
    RuleWeight,
    accumulate,
    rule_weight,
    user_rating_weight,
)
from .serialize import UserEvent


class Phase(str, enum.Enum):
    FIRST_RUN = "FIRST_RUN"
    MONITOR = "MONITOR"
    AWAIT_ACK = "AWAIT_ACK"
    AWAIT_RESOLUTION = "AWAIT_RESOLUTION"
    AWAIT_RATING = "AWAIT_RATING"
    AWAIT_REPORT = "AWAIT_REPORT"


@dataclass
class LatencyProbes:
    """Wall-clock stamps of one episode; all on the backend's monotonic clock."""

    detected_wall: Optional[float] = None
    publish_wall: Optional[float] = None
    ack_wall: Optional[float] = None
    display_wall: Optional[float] = None  # from the client; loopback only
    closed_wall: Optional[float] = None


def measure_latency(probes: LatencyProbes) -> dict[str, float]:
    """Durations in milliseconds; fields are omitted when a probe is missing."""
    metrics: dict[str, float] = {}
    if probes.publish_wall is not None and probes.ack_wall is not None:
        metrics["publish_to_ack_ms"] = (probes.ack_wall - probes.publish_wall) * 1000.0
    if probes.detected_wall is not None and probes.display_wall is not None:
        metrics["detect_to_display_ms"] = (probes.display_wall - probes.detected_wall) * 1000.0
    if probes.publish_wall is not None and probes.closed_wall is not None:
        metrics["cycle_ms"] = (probes.closed_wall - probes.publish_wall) * 1000.0
    return metrics


@dataclass(frozen=True)
class WeightUpdate:
    rule_id: str
    weight: RuleWeight
    criteria: dict[str, float]


@dataclass(frozen=True)
class EventOutcome:
    """Result of one accepted user event: the new phase plus side effects."""

    phase: Phase
    pair_index: int
    weight_update: Optional[WeightUpdate] = None
    report_text: Optional[str] = None
    episode_closed: bool = False


@dataclass
class Session:
    """Mutable session state; owned by a single backend thread."""

    panel_weight: float
    phase: Phase = Phase.FIRST_RUN
    assessment: Optional[Assessment] = None
    pair_index: int = 0
    probes: LatencyProbes = field(default_factory=LatencyProbes)

    def begin_monitoring(self):
        self.phase = Phase.MONITOR
        self.assessment = None
        self.pair_index = 0
        self.probes = LatencyProbes()

    def publish(self, assessment: Assessment, detected_wall: float, publish_wall: float):
        if self.phase is not Phase.MONITOR:
            raise ProtocolError(f"cannot publish an assessment in phase {self.phase.value}")
        self.assessment = assessment
        self.pair_index = 0
        self.phase = Phase.AWAIT_ACK
        self.probes = LatencyProbes(detected_wall=detected_wall, publish_wall=publish_wall)

    def handle_user_event(
        self, event: UserEvent, weights: dict[str, RuleWeight], now: float
    ) -> EventOutcome:
        """Apply one operator event; raises ProtocolError without mutating state."""
        handler = {
            "ack": self._on_ack,
            "next": self._on_next,
            "solved": self._on_solved,
            "rating": self._on_rating,
            "report": self._on_report,
        }[event.kind]
        return handler(event, weights, now)

    def _illegal(self, event: UserEvent) -> ProtocolError:
        return ProtocolError(
            f"event {event.kind!r} is not legal in phase {self.phase.value}"
        )

    def _on_ack(self, event, weights, now) -> EventOutcome:
        if self.phase is not Phase.AWAIT_ACK:
            raise self._illegal(event)
        self.probes.ack_wall = now
        if event.display_ts is not None:
            self.probes.display_wall = float(event.display_ts)
        # no diagnosis on file: go straight to the report path
        self.phase = (
            Phase.AWAIT_RESOLUTION if self.assessment.pairs else Phase.AWAIT_REPORT
        )
        return EventOutcome(phase=self.phase, pair_index=self.pair_index)

    def _on_next(self, event, weights, now) -> EventOutcome:
        if self.phase is not Phase.AWAIT_RESOLUTION:
            raise self._illegal(event)
        self.pair_index += 1
        if self.pair_index >= len(self.assessment.pairs):
            self.pair_index = len(self.assessment.pairs)
            self.phase = Phase.AWAIT_REPORT
        return EventOutcome(phase=self.phase, pair_index=self.pair_index)

    def _on_solved(self, event, weights, now) -> EventOutcome:
        if self.phase is not Phase.AWAIT_RESOLUTION:
            raise self._illegal(event)
        self.phase = Phase.AWAIT_RATING
        return EventOutcome(phase=self.phase, pair_index=self.pair_index)

    def _on_rating(self, event, weights, now) -> EventOutcome:
        if self.phase is not Phase.AWAIT_RATING:
            raise self._illegal(event)
        if event.stars is None:
            raise ProtocolError("rating event needs 'stars'")
        try:
            w_u = user_rating_weight(event.stars)
        except Exception as err:
            raise ProtocolError(str(err)) from err
        update = self._close_episode(
            weights,
            criteria={PANEL_CRITERION: self.panel_weight, KPI_CRITERION: 1.0, USER_CRITERION: w_u},
            now=now,
        )
        return EventOutcome(
            phase=self.phase,
            pair_index=self.pair_index,
            weight_update=update,
            episode_closed=True,
        )

    def _on_report(self, event, weights, now) -> EventOutcome:
        if self.phase is not Phase.AWAIT_REPORT:
            raise self._illegal(event)
        if not event.text:
            raise ProtocolError("report event needs 'text'")
        # unsolved episode: KPI compliance zero, no user rating
        update = self._close_episode(
            weights,
            criteria={PANEL_CRITERION: self.panel_weight, KPI_CRITERION: 0.0},
            now=now,
        )
        return EventOutcome(
            phase=self.phase,
            pair_index=self.pair_index,
            weight_update=update,
            report_text=event.text,
            episode_closed=True,
        )

    def _close_episode(self, weights, criteria, now) -> WeightUpdate:
        rule_id = self.assessment.active_label
        new_w = rule_weight(criteria)
        weights[rule_id] = accumulate(weights[rule_id], new_w, criteria=criteria, timestamp=now)
        update = WeightUpdate(rule_id=rule_id, weight=weights[rule_id], criteria=dict(criteria))
        self.probes.closed_wall = now
        self.phase = Phase.MONITOR
        self.assessment = None
        self.pair_index = 0
        return update
