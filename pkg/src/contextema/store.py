"""Append-only participant store.

Every mutation enters an event list; derived state (place models, context
windows, sessions) is reproducible by replaying those events through the
engine with the same config and seed. Sensor records are bucketed by UTC
day so window queries touch only the days they span.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .ema import EmaSession, PendingPrompt
from .engagement import EngagementBook
from .places import PlaceModel
from .records import (
    KIND_AUDIO,
    KIND_LOCATION,
    LocationSample,
    SensorRecord,
    parse_line,
    serialize_record,
)
from .timebase import SECONDS_PER_DAY, Timestamp


@dataclass
class ParticipantProfile:
    participant_id: str
    tz_offset_s: int = 0
    enrolled_at: Timestamp = 0
    active: bool = True


@dataclass
class ParticipantState:
    profile: ParticipantProfile
    # day -> kind -> [(captured_at, received_at, record)], kind split once at
    # insert so window queries never re-inspect payload types
    day_records: dict[int, dict[str, list[tuple[int, int, SensorRecord]]]] = field(
        default_factory=dict
    )
    place_model: Optional[PlaceModel] = None
    next_refit_at: Timestamp = 0
    next_schedule_day: Timestamp = 0
    next_wake_at: Timestamp = 0  # earliest instant any tick work can be due
    pending_prompts: list[PendingPrompt] = field(default_factory=list)
    sessions: dict[str, EmaSession] = field(default_factory=dict)
    session_order: list[str] = field(default_factory=list)
    open_sessions: set[str] = field(default_factory=set)
    context_windows: list[dict] = field(default_factory=list)
    engagement: EngagementBook = None  # type: ignore[assignment]
    burst_answers: list[tuple[int, str, int]] = field(default_factory=list)
    # dedup set is built lazily: while uploads arrive strictly forward in
    # capture time (the normal device cadence) no hashing is needed at all;
    # the first out-of-order or overlapping batch materializes the set
    _dedup: Optional[set] = None
    _last_captured: dict[str, Timestamp] = field(default_factory=dict)
    _dirty_days: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.engagement is None:
            self.engagement = EngagementBook(self.profile.participant_id)

    # -- records ---------------------------------------------------------

    def add_record(self, record: SensorRecord, received_at: Timestamp) -> bool:
        """Insert one record; returns False for an idempotent duplicate."""
        return bool(self.add_records((record,), received_at))

    @staticmethod
    def _key(captured: Timestamp, payload) -> tuple:
        # flat field tuple: same identity as the payload, cheaper to hash;
        # arities differ so the two kinds cannot collide
        if type(payload) is LocationSample:
            return (captured, payload.lat, payload.lon, payload.accuracy_m)
        return (captured, payload.window_id, payload.offset_s, payload.energy_db, payload.voicing)

    def _build_dedup(self) -> set:
        dedup = set()
        for bucket in self.day_records.values():
            for rows in bucket.values():
                for captured, _, record in rows:
                    dedup.add(self._key(captured, record.payload))
        self._dedup = dedup
        return dedup

    def add_records(
        self, records: Iterable[SensorRecord], received_at: Timestamp
    ) -> list[SensorRecord]:
        """Batch insert; returns the records that were not duplicates."""
        dedup = self._dedup
        day_records = self.day_records
        dirty = self._dirty_days
        last_captured = self._last_captured
        accepted: list[SensorRecord] = []
        for record in records:
            captured = record.captured_at
            payload = record.payload
            kind = KIND_LOCATION if type(payload) is LocationSample else KIND_AUDIO
            if dedup is None and captured <= last_captured.get(kind, -1):
                dedup = self._build_dedup()
            if dedup is not None:
                key = self._key(captured, payload)
                before = len(dedup)
                dedup.add(key)
                if len(dedup) == before:
                    continue
            last = last_captured.get(kind, -1)
            if captured > last:
                last_captured[kind] = captured
            day = captured // SECONDS_PER_DAY
            bucket = day_records.get(day)
            if bucket is None:
                bucket = day_records[day] = {}
            rows = bucket.get(kind)
            if rows is None:
                rows = bucket[kind] = []
            rows.append((captured, received_at, record))
            dirty.add(day)
            accepted.append(record)
        return accepted

    def _day(self, day: int) -> dict[str, list[tuple[int, int, SensorRecord]]]:
        bucket = self.day_records.get(day)
        if bucket is None:
            return {}
        if day in self._dirty_days:
            for rows in bucket.values():
                rows.sort(key=lambda e: e[0])
            self._dirty_days.discard(day)
        return bucket

    def records_between(
        self,
        start: Timestamp,
        end: Timestamp,
        *,
        received_before: Optional[Timestamp] = None,
        kind: Optional[str] = None,
    ) -> list[SensorRecord]:
        """Records with start <= captured_at < end, optionally only those the
        server had received by `received_before` (inclusive)."""
        out: list[SensorRecord] = []
        for day in range(start // SECONDS_PER_DAY, (end - 1) // SECONDS_PER_DAY + 1):
            bucket = self._day(day)
            kinds = (kind,) if kind is not None else tuple(sorted(bucket))
            for k in kinds:
                for captured, received, rec in bucket.get(k, ()):
                    if captured < start or captured >= end:
                        continue
                    if received_before is not None and received > received_before:
                        continue
                    out.append(rec)
        if kind is None:
            out.sort(key=lambda r: r.captured_at)
        return out

    def all_records(self) -> list[SensorRecord]:
        out: list[SensorRecord] = []
        for day in sorted(self.day_records):
            bucket = self._day(day)
            day_rows = [row for rows in bucket.values() for row in rows]
            day_rows.sort(key=lambda e: e[0])
            out.extend(rec for _, _, rec in day_rows)
        return out

    def record_span(self) -> Optional[tuple[Timestamp, Timestamp]]:
        times = [
            rows[0][0]
            for day in self.day_records
            for rows in self._day(day).values()
            if rows
        ] + [
            rows[-1][0]
            for day in self.day_records
            for rows in self._day(day).values()
            if rows
        ]
        if not times:
            return None
        return (min(times), max(times) + 1)


class EventLog:
    """Ordered mutation log with JSON-lines persistence.

    Ingest events keep live record objects in memory; serialization renders
    them through the trace grammar so a store file is self-contained.
    """

    def __init__(self) -> None:
        self.events: list[dict] = []

    def append(self, event: dict) -> None:
        self.events.append(event)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for event in self.events:
                fh.write(json.dumps(_event_to_json(event), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EventLog":
        log = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    log.append(_event_from_json(json.loads(line)))
        return log


def _event_to_json(event: dict) -> dict:
    out = dict(event)
    if "records" in out:
        out["records"] = [serialize_record(r) for r in out["records"]]
    return out


def _event_from_json(raw: dict) -> dict:
    out = dict(raw)
    if "records" in out:
        out["records"] = [parse_line(line) for line in out["records"]]
    return out


@dataclass
class Store:
    participants: dict[str, ParticipantState] = field(default_factory=dict)
    log: EventLog = field(default_factory=EventLog)

    def state(self, participant_id: str) -> ParticipantState:
        return self.participants[participant_id]

    def ids(self) -> list[str]:
        return sorted(self.participants)


def iter_resolutions(state: ParticipantState):
    for sid in state.session_order:
        res = state.sessions[sid].resolution
        if res is not None:
            yield res


def sessions_in_order(state: ParticipantState) -> Iterable[EmaSession]:
    return (state.sessions[sid] for sid in state.session_order)
