"""Operational backend: poll, dispatch, publish, handshake, persist.

One Backend instance owns the session state and the rule weights; every
mutation happens on the thread that calls :meth:`step` (the polling loop),
and transports hand user events over a queue. The loop:

* on first run, primes every rule weight with the expert-panel prior and
  persists those priors;
* polls a snapshot from the data source, dispatches the knowledge model and,
  after a debounce of consecutive confirmations, publishes an assessment for
  an actionable fault and awaits the operator handshake;
* on solved + rating closes the episode with full KPI compliance, on an
  exhausted recommendation list requests a report and closes it with zero
  compliance; either path updates and persists the rule weight exactly once.

A failure mode is actionable when the workbook defines component rows for
it: a status mode with no diagnoses (e.g. confirmed normal production) is
reported on the status topic but never engages the handshake.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from typing import Mapping, Optional, Protocol

from ..errors import ConfigurationError, ProtocolError
from ..fmea import Workbook
from ..knowledge import Assessment, KnowledgeModel, assess, dispatch
from ..ruledsl import Snapshot
from ..weights import RuleWeight, prior_rule_weight, workbook_panel_weight
from .bus import TOPIC_ASSESSMENT, TOPIC_EVENT_PREFIX, TOPIC_STATUS, MessageBus
from .serialize import (
    UserEvent,
    assessment_to_payload,
    event_to_payload,
    payload_to_event,
    status_payload,
)
from .session import LatencyProbes, Phase, Session, measure_latency
from .store import EventStore, replay_weights

logger = logging.getLogger(__name__)

DEFAULT_POLL_PERIOD = 1.0
DEFAULT_DEBOUNCE = 2
KPI_SAMPLE_EVERY_S = 60.0


class DataSource(Protocol):
    def snapshot(self) -> Snapshot: ...


class Backend:
    def __init__(
        self,
        workbook: Workbook,
        data_source: DataSource,
        bus: Optional[MessageBus] = None,
        store: Optional[EventStore] = None,
        poll_period: float = DEFAULT_POLL_PERIOD,
        debounce: int = DEFAULT_DEBOUNCE,
        clock=time.time,
    ):
        if debounce < 1:
            raise ConfigurationError("debounce must be >= 1")
        self.workbook = workbook
        self.model = KnowledgeModel.from_workbook(workbook)
        self.data_source = data_source
        self.bus = bus if bus is not None else MessageBus()
        self.store = store if store is not None else EventStore()
        self.poll_period = poll_period
        self.debounce = debounce
        self.clock = clock

        self.panel_weight = workbook_panel_weight(workbook)
        self.weights: dict[str, RuleWeight] = {}
        self.session = Session(panel_weight=self.panel_weight)
        self.latencies: list[dict[str, float]] = []

        self._thresholds = workbook.settings.combined()
        self._actionable = {
            fm.fm_id: bool(workbook.components_of(fm.fm_id)) for fm in workbook.system_fms
        }
        self._inbound: "queue.Queue[tuple[UserEvent, queue.Queue]]" = queue.Queue()
        self._candidate_label: Optional[str] = None
        self._candidate_count = 0
        self._clear_count = 0
        self._resolved_hint_sent = False
        self._last_status: Optional[dict] = None
        self._last_kpi_sample = 0.0
        self._outbound_buffer: list[tuple[str, dict, bool]] = []
        self._stop = threading.Event()
        self._checked_schema = False

        self.bus.subscribe(f"{TOPIC_EVENT_PREFIX}/#", self._on_bus_event)

    # -- startup -----------------------------------------------------------

    def start_first_run(self):
        """Prime or restore rule weights; idempotent across restarts."""
        restored = replay_weights(self.store.records())
        if restored:
            missing = [l for l in self.model.frame.labels if l not in restored]
            if missing:
                raise ConfigurationError(
                    f"event log lacks priors for {missing}; wrong log for this workbook?"
                )
            self.weights = restored
            logger.info("restored %d rule weights from the event log", len(restored))
        else:
            now = self.clock()
            for label in self.model.frame.labels:
                weight = prior_rule_weight(label, self.panel_weight)
                self.weights[label] = weight
                self.store.append(
                    "weight_update",
                    {
                        "rule_id": label,
                        "w_r": weight.current,
                        "criteria": dict(weight.criteria),
                        "initial": True,
                    },
                    ts=now,
                )
        self.session.begin_monitoring()
        self._publish_status()

    # -- transport glue ------------------------------------------------------

    def _on_bus_event(self, topic: str, payload: dict):
        """Bus deliveries are queued; the polling thread owns all state."""
        try:
            event = payload_to_event(payload)
        except ProtocolError:
            logger.warning("dropping malformed event on %s: %r", topic, payload)
            return
        self._inbound.put((event, None))

    def submit_event(self, payload: Mapping) -> dict:
        """Synchronous entry point for HTTP: queue the event, wait for the reply."""
        event = payload_to_event(payload)
        reply_box: "queue.Queue[dict]" = queue.Queue()
        self._inbound.put((event, reply_box))
        return reply_box.get(timeout=10.0)

    # -- main loop -----------------------------------------------------------

    def step(self) -> Optional[Assessment]:
        """One backend cycle: drain operator events, then poll and evaluate."""
        self._drain_events()
        snapshot = self._poll_snapshot()
        if snapshot is None:
            return None
        self._sample_kpi(snapshot)
        self._collect_plant_events()
        label = dispatch(self.model, snapshot, self._thresholds)
        if self.session.phase is Phase.MONITOR:
            return self._monitor_cycle(label, snapshot)
        self._episode_cycle(label)
        return None

    def run(self, stop: Optional[threading.Event] = None):
        """Blocking poll loop with backoff on data-source trouble."""
        stop = stop or self._stop
        backoff = self.poll_period
        while not stop.is_set():
            try:
                self.step()
                backoff = self.poll_period
            except Exception:
                logger.exception("backend cycle failed; backing off %.1fs", backoff)
                backoff = min(backoff * 2, 5.0)
            stop.wait(backoff)

    def stop(self):
        self._stop.set()

    # -- cycle pieces ----------------------------------------------------------

    def _poll_snapshot(self) -> Optional[Snapshot]:
        try:
            snapshot = self.data_source.snapshot()
        except TimeoutError as err:
            logger.warning("data source timeout: %s", err)
            return None
        if not self._checked_schema:
            missing = [n for n in self.workbook.variables if n not in snapshot]
            if missing:
                raise ConfigurationError(
                    f"data source snapshot lacks workbook variables: {missing}"
                )
            self._checked_schema = True
        return snapshot

    def _monitor_cycle(self, label: str, snapshot: Snapshot) -> Optional[Assessment]:
        if label != self._candidate_label:
            self._candidate_label = label
            self._candidate_count = 0
        self._candidate_count += 1
        self._publish_status(active_label=None if label == self.model.exit_label else label)
        if (
            label == self.model.exit_label
            or not self._actionable.get(label, False)
            or self._candidate_count < self.debounce
        ):
            return None
        # debounced actionable fault: publish and engage the handshake
        now = self.clock()
        assessment = assess(
            self.model,
            self.workbook,
            {rule_id: w.current for rule_id, w in self.weights.items()},
            snapshot,
            thresholds=self._thresholds,
        )
        payload = assessment_to_payload(assessment, pair_index=0)
        self.session.publish(assessment, detected_wall=now, publish_wall=now)
        self._publish(TOPIC_ASSESSMENT, payload, retain=True)
        self.store.append("assessment", payload, ts=now)
        self._publish_status()
        self._candidate_label = None
        self._candidate_count = 0
        self._clear_count = 0
        self._resolved_hint_sent = False
        return assessment

    def _episode_cycle(self, label: str):
        """Mid-episode polling: propose 'solved' once the fault clears in the data."""
        active = self.session.assessment.active_label if self.session.assessment else None
        if label == active:
            self._clear_count = 0
            return
        self._clear_count += 1
        if (
            self._clear_count >= self.debounce
            and not self._resolved_hint_sent
            and self.session.phase in (Phase.AWAIT_ACK, Phase.AWAIT_RESOLUTION)
        ):
            self._resolved_hint_sent = True
            self._publish_status(resolved_hint=True)

    def _drain_events(self):
        while True:
            try:
                event, reply_box = self._inbound.get_nowait()
            except queue.Empty:
                return
            reply = self.apply_event(event)
            if reply_box is not None:
                reply_box.put(reply)

    def apply_event(self, event: UserEvent) -> dict:
        """Apply one operator event on the owning thread; returns the wire reply."""
        now = self.clock()
        try:
            outcome = self.session.handle_user_event(event, self.weights, now)
        except ProtocolError as err:
            logger.info("rejected %s: %s", event.kind, err)
            return {"ok": False, "error": str(err), "phase": self.session.phase.value}
        self.store.append(event.kind, event_to_payload(event), ts=now)
        if outcome.weight_update is not None:
            update = outcome.weight_update
            self.store.append(
                "weight_update",
                {
                    "rule_id": update.rule_id,
                    "w_r": update.weight.current,
                    "criteria": update.criteria,
                    "initial": False,
                },
                ts=now,
            )
            self.store.maybe_snapshot_weights(self.weights)
        if outcome.episode_closed:
            metrics = measure_latency(self.session.probes)
            if metrics:
                self.latencies.append(metrics)
            self.session.begin_monitoring()
        self._publish_status()
        return {"ok": True, "phase": self.session.phase.value, "pair_index": outcome.pair_index}

    def _sample_kpi(self, snapshot: Snapshot):
        if "production_rate" not in snapshot:
            return
        if snapshot.timestamp - self._last_kpi_sample < KPI_SAMPLE_EVERY_S:
            return
        self._last_kpi_sample = snapshot.timestamp
        self.store.append(
            "kpi_sample",
            {"metric": "production_rate", "value": snapshot.get("production_rate")},
            ts=self.clock(),
        )

    def _collect_plant_events(self):
        """Record scenario actions the data source applied since the last poll."""
        pop = getattr(self.data_source, "pop_applied_commands", None)
        if pop is None:
            return
        for command in pop():
            kind = "fault_injected" if command.action in ("inject", "clear") else "recipe_change"
            self.store.append(
                kind,
                {"action": command.action, "argument": command.argument,
                 "at_seconds": command.at_seconds},
                ts=self.clock(),
            )

    # -- outbound ---------------------------------------------------------------

    def _publish(self, topic: str, payload: dict, retain: bool = False):
        self._outbound_buffer.append((topic, payload, retain))
        remaining: list[tuple[str, dict, bool]] = []
        for queued_topic, queued_payload, queued_retain in self._outbound_buffer:
            try:
                self.bus.publish(queued_topic, queued_payload, retain=queued_retain)
            except Exception:
                # bus unavailable: keep buffering, retry next publish
                logger.warning("publish to %s failed; buffering", queued_topic)
                remaining.append((queued_topic, queued_payload, queued_retain))
        self._outbound_buffer = remaining

    def _publish_status(
        self, active_label: Optional[str] = None, resolved_hint: bool = False
    ):
        if self.session.assessment is not None:
            active_label = self.session.assessment.active_label
        payload = status_payload(
            phase=self.session.phase.value,
            active_label=active_label,
            pair_index=self.session.pair_index,
            ts=self.clock(),
            resolved_hint=resolved_hint,
        )
        comparable = {k: v for k, v in payload.items() if k != "ts"}
        if self._last_status == comparable:
            return
        self._last_status = comparable
        self._publish(TOPIC_STATUS, payload, retain=True)

    # -- metrics -----------------------------------------------------------------

    def metrics(self) -> dict:
        summary: dict[str, dict[str, float]] = {}
        for key in ("publish_to_ack_ms", "detect_to_display_ms", "cycle_ms"):
            values = sorted(m[key] for m in self.latencies if key in m)
            if values:
                summary[key] = {
                    "median": values[len(values) // 2],
                    "count": len(values),
                }
        return {
            "phase": self.session.phase.value,
            "episodes": len(self.latencies),
            "latency": summary,
            "weights": {label: w.current for label, w in self.weights.items()},
            "events_logged": self.store.next_seq - 1,
        }
