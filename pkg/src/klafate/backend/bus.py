"""In-process topic bus mirroring the deployment's MQTT topology.

Topics are slash-separated strings; a subscription pattern is either an exact
topic or a prefix ending in ``/#``. Delivery is synchronous in the publisher's
thread, which keeps tests deterministic. Publishing can retain the last
message per topic so late subscribers (e.g. a reconnecting console) catch up
immediately.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable, Optional

logger = logging.getLogger(__name__)

TOPIC_ASSESSMENT = "klafate/assessment"
TOPIC_STATUS = "klafate/status"
TOPIC_EVENT_PREFIX = "klafate/event"


def event_topic(kind: str) -> str:
    return f"{TOPIC_EVENT_PREFIX}/{kind}"


class Subscription:
    def __init__(self, bus: "MessageBus", pattern: str, callback):
        self._bus = bus
        self.pattern = pattern
        self.callback = callback

    def unsubscribe(self):
        self._bus._remove(self)


def _matches(pattern: str, topic: str) -> bool:
    if pattern.endswith("/#"):
        return topic.startswith(pattern[:-1]) or topic == pattern[:-2]
    return pattern == topic


class MessageBus:
    def __init__(self):
        self._lock = threading.RLock()
        self._subscriptions: list[Subscription] = []
        self._retained: dict[str, dict] = {}

    def subscribe(
        self, pattern: str, callback: Callable[[str, dict], None], replay_retained: bool = False
    ) -> Subscription:
        subscription = Subscription(self, pattern, callback)
        with self._lock:
            self._subscriptions.append(subscription)
            retained = [
                (topic, payload)
                for topic, payload in self._retained.items()
                if replay_retained and _matches(pattern, topic)
            ]
        for topic, payload in retained:
            callback(topic, payload)
        return subscription

    def publish(self, topic: str, payload: dict, retain: bool = False) -> None:
        with self._lock:
            if retain:
                self._retained[topic] = payload
            targets = [s for s in self._subscriptions if _matches(s.pattern, topic)]
        for subscription in targets:
            try:
                subscription.callback(topic, payload)
            except Exception:  # subscriber bugs must not break the publisher
                logger.exception("subscriber for %s failed on %s", subscription.pattern, topic)

    def retained(self, topic: str) -> Optional[dict]:
        with self._lock:
            return self._retained.get(topic)

    def _remove(self, subscription: Subscription) -> None:
        with self._lock:
            if subscription in self._subscriptions:
                self._subscriptions.remove(subscription)
