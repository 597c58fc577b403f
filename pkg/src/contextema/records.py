"""Sensor record types and the line-delimited trace format.

Trace grammar (UTF-8, one record per line, `#` starts a comment):

    <participant_id>,<ISO-8601 UTC>,LOC,<lat>,<lon>,<accuracy_m>
    <participant_id>,<ISO-8601 UTC>,AUD,<window_id>,<offset_s>,<energy_db>,<voicing>

Any other record kind token is accepted as an opaque line and ignored
(counted in the parse report, never turned into a record). No type here can
carry raw audio: audio rows are derived per-second features only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import InvalidWindow, MalformedTrace
from .timebase import Timestamp, format_iso, parse_iso

KIND_LOCATION = "LOC"
KIND_AUDIO = "AUD"


@dataclass(frozen=True, slots=True)
class LocationSample:
    lat: float
    lon: float
    accuracy_m: float


@dataclass(frozen=True, slots=True)
class AudioFrame:
    """One derived audio feature frame for one second of an active window."""

    window_id: int
    offset_s: int
    energy_db: float
    voicing: float


Payload = Union[LocationSample, AudioFrame]


@dataclass(frozen=True, slots=True)
class SensorRecord:
    participant_id: str
    captured_at: Timestamp
    payload: Payload

    @property
    def kind(self) -> str:
        return KIND_LOCATION if isinstance(self.payload, LocationSample) else KIND_AUDIO


@dataclass(frozen=True, slots=True)
class MalformedLine:
    line_no: int
    reason: str
    raw: str


@dataclass
class ParseReport:
    errors: list[MalformedLine]
    other_lines: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors


def _parse_float(token: str, name: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(f"{name} not finite")
    return value


def parse_line(line: str) -> SensorRecord | None:
    """Parse one trace line; returns None for opaque non-driving kinds.

    Raises ValueError with a reason for malformed lines.
    """
    fields = [f.strip() for f in line.split(",")]
    if len(fields) < 3:
        raise ValueError("expected at least participant,timestamp,kind")
    participant_id, ts_text, kind = fields[0], fields[1], fields[2]
    if not participant_id:
        raise ValueError("empty participant_id")
    try:
        captured_at = parse_iso(ts_text)
    except ValueError as exc:
        raise ValueError(f"bad timestamp: {exc}") from None

    if kind == KIND_LOCATION:
        if len(fields) != 6:
            raise ValueError("LOC line needs lat,lon,accuracy_m")
        lat = _parse_float(fields[3], "lat")
        lon = _parse_float(fields[4], "lon")
        accuracy = _parse_float(fields[5], "accuracy_m")
        if not -90.0 <= lat <= 90.0:
            raise ValueError("lat out of range")
        if not -180.0 <= lon <= 180.0:
            raise ValueError("lon out of range")
        if accuracy < 0:
            raise ValueError("accuracy_m negative")
        return SensorRecord(participant_id, captured_at, LocationSample(lat, lon, accuracy))

    if kind == KIND_AUDIO:
        if len(fields) != 7:
            raise ValueError("AUD line needs window_id,offset_s,energy_db,voicing")
        window_id = int(fields[3])
        offset_s = int(fields[4])
        energy_db = _parse_float(fields[5], "energy_db")
        voicing = _parse_float(fields[6], "voicing")
        if window_id < 0:
            raise ValueError("window_id negative")
        if not 0 <= offset_s < 60:
            raise ValueError("offset_s out of [0, 60)")
        if not 0.0 <= voicing <= 1.0:
            raise ValueError("voicing out of [0, 1]")
        return SensorRecord(participant_id, captured_at, AudioFrame(window_id, offset_s, energy_db, voicing))

    # Opaque modality (activity, light, app usage, ...): accepted, unused.
    return None


def parse_trace(data: bytes | str | Iterable[str]) -> tuple[list[SensorRecord], ParseReport]:
    """Parse a trace into records sorted by (participant_id, captured_at).

    Malformed lines are quarantined into the report with line numbers and
    reasons rather than aborting; raises MalformedTrace only when there were
    parse errors and not a single valid record.
    """
    if isinstance(data, bytes):
        lines: Iterable[str] = data.decode("utf-8").splitlines()
    elif isinstance(data, str):
        lines = data.splitlines()
    else:
        lines = data

    records: list[SensorRecord] = []
    report = ParseReport(errors=[])
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            record = parse_line(stripped)
        except ValueError as exc:
            report.errors.append(MalformedLine(line_no, str(exc), stripped))
            continue
        if record is None:
            report.other_lines += 1
        else:
            records.append(record)

    if report.errors and not records:
        raise MalformedTrace(f"no valid records ({len(report.errors)} malformed lines)")
    records.sort(key=lambda r: (r.participant_id, r.captured_at))
    return records, report


def serialize_record(record: SensorRecord) -> str:
    # float() guards against numpy scalars sneaking in; repr keeps the
    # shortest round-trippable decimal form
    p = record.payload
    ts = format_iso(record.captured_at)
    if isinstance(p, LocationSample):
        return (
            f"{record.participant_id},{ts},LOC,"
            f"{float(p.lat)!r},{float(p.lon)!r},{float(p.accuracy_m)!r}"
        )
    return (
        f"{record.participant_id},{ts},AUD,{p.window_id},{p.offset_s},"
        f"{float(p.energy_db)!r},{float(p.voicing)!r}"
    )


def serialize_trace(records: Iterable[SensorRecord]) -> str:
    return "\n".join(serialize_record(r) for r in records) + "\n"


def slice_records(
    series: Iterable[SensorRecord], start: Timestamp, end: Timestamp
) -> list[SensorRecord]:
    """Records with start <= captured_at < end, input order preserved."""
    if start > end:
        raise InvalidWindow(f"window start {start} after end {end}")
    return [r for r in series if start <= r.captured_at < end]
