"""Time model: UTC epoch seconds at 1-second resolution.

All engine logic runs on plain integer UTC seconds; participant-local
wall-clock features (night windows, prompt times, day boundaries) map
through a fixed per-participant UTC offset. ISO-8601 strings appear only
at the interfaces (trace files, CSV, HTTP payloads).
"""

from __future__ import annotations

from datetime import datetime, timezone

Timestamp = int

SECONDS_PER_MINUTE = 60
SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400


def parse_iso(text: str) -> Timestamp:
    """Parse an ISO-8601 timestamp ('Z' or explicit offset) to UTC seconds."""
    raw = text.strip()
    if raw.endswith("Z") or raw.endswith("z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_iso(t: Timestamp) -> str:
    """Render UTC seconds as 'YYYY-MM-DDTHH:MM:SSZ'."""
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_hhmm(text: str) -> int:
    """'08:00' -> seconds since local midnight."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"expected HH:MM[:SS], got {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if not (0 <= h < 24 and 0 <= m < 60 and 0 <= s < 60):
        raise ValueError(f"clock time out of range: {text!r}")
    return h * SECONDS_PER_HOUR + m * SECONDS_PER_MINUTE + s


def local_day_start(t: Timestamp, tz_offset_s: int = 0) -> Timestamp:
    """UTC instant of local midnight for the local day containing *t*."""
    local = t + tz_offset_s
    return local - (local % SECONDS_PER_DAY) - tz_offset_s


def local_seconds_of_day(t: Timestamp, tz_offset_s: int = 0) -> int:
    return (t + tz_offset_s) % SECONDS_PER_DAY


def at_local_time(day_start_utc: Timestamp, seconds_of_day: int) -> Timestamp:
    """UTC instant of a local clock time on the day starting at *day_start_utc*."""
    return day_start_utc + seconds_of_day
