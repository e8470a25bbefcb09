"""Append-only NDJSON event log with deterministic weight replay.

Every state change of the operational service is an EventRecord appended to
``events.ndjson``. Replaying the weight_update records of a log rebuilds the
exact rule-weight state, byte-for-byte under canonical serialization, which
is both the restart path and the audit path. A weights snapshot file is
written every N appends so large logs can restart without a full scan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from ..errors import InvalidParameterError
from ..weights import RuleWeight, accumulate, prior_rule_weight
from .serialize import dumps_canonical, weights_to_jsonable

EVENT_KINDS = frozenset(
    {
        "assessment",
        "ack",
        "next",
        "solved",
        "rating",
        "report",
        "weight_update",
        "kpi_sample",
        "recipe_change",
        "fault_injected",
    }
)

LOG_FILENAME = "events.ndjson"
WEIGHTS_FILENAME = "weights.json"
DEFAULT_SNAPSHOT_EVERY = 100


@dataclass(frozen=True)
class EventRecord:
    seq: int
    ts: float
    kind: str
    payload: dict

    def to_jsonable(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "EventRecord":
        return cls(
            seq=int(data["seq"]),
            ts=float(data["ts"]),
            kind=str(data["kind"]),
            payload=dict(data["payload"]),
        )


class EventStore:
    """Sequential, gap-free event log; in-memory with optional directory backing."""

    def __init__(self, directory=None, snapshot_every: int = DEFAULT_SNAPSHOT_EVERY):
        if snapshot_every < 1:
            raise InvalidParameterError("snapshot_every must be >= 1")
        self._records: list[EventRecord] = []
        self._snapshot_every = snapshot_every
        self._directory: Optional[Path] = Path(directory) if directory else None
        self._log_handle = None
        if self._directory:
            self._directory.mkdir(parents=True, exist_ok=True)
            log_path = self._directory / LOG_FILENAME
            if log_path.exists():
                self._records = load_records(log_path)
            self._log_handle = open(log_path, "a", encoding="utf-8")

    @property
    def directory(self) -> Optional[Path]:
        return self._directory

    @property
    def next_seq(self) -> int:
        return self._records[-1].seq + 1 if self._records else 1

    def append(self, kind: str, payload: dict, ts: float) -> EventRecord:
        if kind not in EVENT_KINDS:
            raise InvalidParameterError(f"unknown event kind {kind!r}")
        record = EventRecord(seq=self.next_seq, ts=ts, kind=kind, payload=dict(payload))
        self._records.append(record)
        if self._log_handle:
            self._log_handle.write(dumps_canonical(record.to_jsonable()) + "\n")
            self._log_handle.flush()
        return record

    def records(self) -> list[EventRecord]:
        return list(self._records)

    def maybe_snapshot_weights(self, weights: Mapping[str, RuleWeight]) -> bool:
        """Write the weights snapshot when the log crossed the snapshot period."""
        if not self._directory or not self._records:
            return False
        if self._records[-1].seq % self._snapshot_every != 0:
            return False
        self.write_weights_snapshot(weights)
        return True

    def write_weights_snapshot(self, weights: Mapping[str, RuleWeight]) -> None:
        if not self._directory:
            return
        snapshot = {
            "seq": self._records[-1].seq if self._records else 0,
            "weights": weights_to_jsonable(weights),
        }
        (self._directory / WEIGHTS_FILENAME).write_text(
            dumps_canonical(snapshot) + "\n", encoding="utf-8"
        )

    def close(self):
        if self._log_handle:
            self._log_handle.close()
            self._log_handle = None


def load_records(path) -> list[EventRecord]:
    records: list[EventRecord] = []
    path = Path(path)
    if path.is_dir():
        path = path / LOG_FILENAME
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(EventRecord.from_jsonable(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as err:
                raise InvalidParameterError(f"{path}:{number}: bad event record: {err}") from err
    expected = list(range(1, len(records) + 1))
    if [r.seq for r in records] != expected:
        raise InvalidParameterError(f"{path}: event log sequence numbers are not gap-free")
    return records


def replay_weights(records: Iterable[EventRecord]) -> dict[str, RuleWeight]:
    """Rebuild rule weights from the weight_update records of a log.

    Applies the same accumulation the live service used, so the final state
    serializes to identical bytes.
    """
    weights: dict[str, RuleWeight] = {}
    for record in records:
        if record.kind != "weight_update":
            continue
        payload = record.payload
        rule_id = payload["rule_id"]
        if payload.get("initial"):
            weights[rule_id] = prior_rule_weight(rule_id, payload["w_r"])
            continue
        if rule_id not in weights:
            raise InvalidParameterError(
                f"weight update for {rule_id!r} before its prior was recorded"
            )
        weights[rule_id] = accumulate(
            weights[rule_id],
            payload["w_r"],
            criteria=payload.get("criteria"),
            timestamp=record.ts,
        )
    return weights
