"""Session logs: an ordered event stream of one sketching sitting.

A session interleaves three event kinds: strokes added to a concept,
commit markers, and switches between concepts.  Concept ids are small
contiguous integers (0..k-1).  Event timestamps never decrease.
Session logs are the fixture carrier for process analytics and can be
replayed into a repository.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Union

from .errors import MalformedInput, SchemaViolation
from .strokes import (
    StrokeRecord,
    record_from_obj,
    format_timestamp,
    parse_timestamp,
    record_to_obj,
)


@dataclass(frozen=True)
class StrokeAdded:
    record: StrokeRecord
    concept_id: int

    @property
    def timestamp(self) -> datetime:
        return self.record.timestamp


@dataclass(frozen=True)
class CommitMarker:
    message: str
    timestamp: datetime


@dataclass(frozen=True)
class ConceptSwitch:
    concept_id: int
    timestamp: datetime


SessionEvent = Union[StrokeAdded, CommitMarker, ConceptSwitch]


@dataclass(frozen=True)
class SessionLog:
    author: str
    started_at: datetime
    events: tuple[SessionEvent, ...]

    def __post_init__(self):
        last = self.started_at
        concept_ids = set()
        for event in self.events:
            if event.timestamp < last:
                raise SchemaViolation("session event timestamps must be non-decreasing")
            last = event.timestamp
            if isinstance(event, (StrokeAdded, ConceptSwitch)):
                concept_ids.add(event.concept_id)
        if concept_ids and concept_ids != set(range(len(concept_ids))):
            raise SchemaViolation("concept ids must form a contiguous 0-based set")

    @property
    def concept_count(self) -> int:
        return len({e.concept_id for e in self.events if isinstance(e, (StrokeAdded, ConceptSwitch))})


def session_to_obj(log: SessionLog) -> dict:
    events = []
    for event in log.events:
        if isinstance(event, StrokeAdded):
            events.append({
                "type": "stroke_added",
                "concept_id": event.concept_id,
                "record": record_to_obj(event.record),
            })
        elif isinstance(event, CommitMarker):
            events.append({
                "type": "commit_marker",
                "message": event.message,
                "timestamp": format_timestamp(event.timestamp),
            })
        else:
            events.append({
                "type": "concept_switch",
                "concept_id": event.concept_id,
                "timestamp": format_timestamp(event.timestamp),
            })
    return {
        "author": log.author,
        "started_at": format_timestamp(log.started_at),
        "events": events,
    }


def session_from_obj(obj: dict) -> SessionLog:
    try:
        events: list[SessionEvent] = []
        for raw in obj["events"]:
            kind = raw["type"]
            if kind == "stroke_added":
                events.append(StrokeAdded(record=record_from_obj(raw["record"]), concept_id=int(raw["concept_id"])))
            elif kind == "commit_marker":
                events.append(CommitMarker(message=raw["message"], timestamp=parse_timestamp(raw["timestamp"])))
            elif kind == "concept_switch":
                events.append(ConceptSwitch(concept_id=int(raw["concept_id"]), timestamp=parse_timestamp(raw["timestamp"])))
            else:
                raise MalformedInput(f"unknown session event type {kind!r}")
        return SessionLog(
            author=obj["author"],
            started_at=parse_timestamp(obj["started_at"]),
            events=tuple(events),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"bad session log object: {exc}") from None


def load_session(path) -> SessionLog:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"session file is not JSON: {exc}") from None
    return session_from_obj(obj)


def save_session(log: SessionLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(session_to_obj(log), fh, indent=2, ensure_ascii=False)
