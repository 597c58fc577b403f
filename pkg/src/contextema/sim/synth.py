"""Ground-truth day generation and sensor-trace rendering.

Every draw comes from a generator keyed by (seed, participant, day,
stream), so ground truth is identical across processing configs and a whole
study is reproducible from one seed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..context import CompanyState, LocationState, SocialContext
from ..records import AudioFrame, LocationSample, SensorRecord
from ..timebase import SECONDS_PER_DAY, SECONDS_PER_HOUR, Timestamp
from .personas import Persona

METERS_PER_DEG_LAT = 111_194.92664455874

LOCATION_INTERVAL_S = 300
DOZE_LOCATION_INTERVAL_S = 2100  # unattended phone: sparse fixes, > coverage gap rule
AUDIO_PERIOD_S = 600
AUDIO_ACTIVE_S = 60
SPEECH_SECOND_PROB = 0.6
TRAVEL_S = 600  # straight-line travel segment at outing boundaries


def rng_for(seed: int, participant_id: str, day_index: int, stream: str) -> np.random.Generator:
    # day_index -1 is reserved for per-study streams (venues); entropy must be
    # non-negative for SeedSequence
    key = (seed, zlib.crc32(participant_id.encode()), day_index + 1, zlib.crc32(stream.encode()))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


@dataclass(frozen=True, slots=True)
class Outing:
    start: Timestamp
    end: Timestamp
    venue: tuple[float, float]
    phone_carried: bool


@dataclass
class GroundTruthDay:
    day_start: Timestamp
    persona_id: str
    outings: list[Outing]
    conversations: list[tuple[Timestamp, Timestamp]]
    tv_intervals: list[tuple[Timestamp, Timestamp]]

    def away_at(self, t: Timestamp) -> bool:
        return any(o.start <= t < o.end for o in self.outings)

    def phone_home_at(self, t: Timestamp) -> bool:
        return any(o.start <= t < o.end and not o.phone_carried for o in self.outings)


def venue_offsets(seed: int, persona: Persona) -> list[tuple[float, float]]:
    """Fixed venues 1.2-4 km from home, stable per (seed, persona)."""
    rng = rng_for(seed, persona.participant_id, -1, "venues")
    venues = []
    for _ in range(persona.n_venues):
        bearing = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(1200.0, 4000.0)
        north, east = dist * math.cos(bearing), dist * math.sin(bearing)
        venues.append(_offset(persona.home_lat, persona.home_lon, north, east))
    return venues


def _offset(lat: float, lon: float, north_m: float, east_m: float) -> tuple[float, float]:
    return (
        lat + north_m / METERS_PER_DEG_LAT,
        lon + east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(lat))),
    )


def generate_ground_truth(
    persona: Persona,
    day_start: Timestamp,
    day_index: int,
    seed: int,
    *,
    venues: Optional[list[tuple[float, float]]] = None,
) -> GroundTruthDay:
    """One day of true behavior: outings, conversation intervals, TV."""
    rng = rng_for(seed, persona.participant_id, day_index, "truth")
    venues = venues if venues is not None else venue_offsets(seed, persona)
    wake_start = int(persona.sleep_end_h * SECONDS_PER_HOUR)
    wake_end = int(persona.sleep_start_h * SECONDS_PER_HOUR)

    outings: list[Outing] = []
    if persona.outing_prob > 0 and rng.random() < persona.outing_prob:
        n = int(rng.integers(1, persona.max_outings + 1))
        for _ in range(n):
            start_h = rng.uniform(*persona.outing_start_range_h)
            duration_h = rng.uniform(*persona.outing_duration_range_h)
            start = day_start + int(start_h * SECONDS_PER_HOUR)
            end = min(start + int(duration_h * SECONDS_PER_HOUR), day_start + wake_end)
            if end <= start:
                continue
            if any(o.start < end and start < o.end for o in outings):
                continue
            venue = venues[int(rng.integers(0, len(venues)))] if venues else (
                persona.home_lat,
                persona.home_lon,
            )
            carried = bool(rng.random() < persona.phone_carry_prob)
            outings.append(Outing(start, end, venue, carried))
        outings.sort(key=lambda o: o.start)

    week = day_index // 7
    trend = max(0.0, 1.0 + persona.conv_trend_per_week * week)
    conversations: list[tuple[int, int]] = []

    def draw_duration() -> int:
        if rng.random() < persona.conv_short_frac:
            return int(rng.integers(*persona.conv_short_range_s))
        return int(rng.integers(*persona.conv_duration_range_s))

    for hour in range(24):
        h0 = day_start + hour * SECONDS_PER_HOUR
        if not (wake_start <= hour * SECONDS_PER_HOUR < wake_end):
            continue
        away = any(o.start < h0 + SECONDS_PER_HOUR and h0 < o.end for o in outings)
        rate = (persona.conv_rate_away_per_h if away else persona.conv_rate_home_per_h) * trend
        for _ in range(int(rng.poisson(rate))):
            start = h0 + int(rng.integers(0, SECONDS_PER_HOUR))
            conversations.append((start, start + draw_duration()))
        bump = persona.social_hours.get(hour, 0.0) * trend
        if bump > 0 and rng.random() < min(bump, 1.0):
            start = h0 + int(rng.integers(0, 2100))
            conversations.append((start, start + int(rng.integers(900, 2400))))

    conversations.sort()
    merged: list[tuple[int, int]] = []
    for start, end in conversations:
        end = min(end, day_start + SECONDS_PER_DAY)
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(end, merged[-1][1]))
        else:
            merged.append((start, end))

    tv = [
        (day_start + h * SECONDS_PER_HOUR, day_start + (h + 1) * SECONDS_PER_HOUR)
        for h in persona.tv_hours
    ]
    return GroundTruthDay(day_start, persona.participant_id, outings, merged, tv)


def _position_at(day: GroundTruthDay, persona: Persona, t: Timestamp) -> tuple[float, float]:
    """True participant position with straight-line travel at boundaries."""
    home = (persona.home_lat, persona.home_lon)
    for o in day.outings:
        if o.start <= t < o.end:
            if t < o.start + TRAVEL_S:
                f = (t - o.start) / TRAVEL_S
            elif t >= o.end - TRAVEL_S:
                f = (o.end - t) / TRAVEL_S
            else:
                return o.venue
            return (
                home[0] + (o.venue[0] - home[0]) * f,
                home[1] + (o.venue[1] - home[1]) * f,
            )
    return home


def render_sensor_traces(
    day: GroundTruthDay,
    persona: Persona,
    seed: int,
    day_index: int,
    *,
    gps_sigma_m: float = 20.0,
) -> list[SensorRecord]:
    """Render one day of LOC/AUD records from ground truth.

    An unattended phone (outing without it) dozes: location falls to sparse
    home-position fixes and audio windows go silent. Conversation seconds get
    voiced frames, TV seconds get loud-but-unvoiced frames, and every active
    window otherwise emits one quiet frame.
    """
    rng = rng_for(seed, persona.participant_id, day_index, "noise")
    pid = persona.participant_id
    day_start = day.day_start
    records: list[SensorRecord] = []
    doze_spans = [(o.start, o.end) for o in day.outings if not o.phone_carried]

    def dozing(t: Timestamp) -> bool:
        for d0, d1 in doze_spans:
            if d0 <= t < d1:
                return True
        return False

    # -- location ---------------------------------------------------------
    times = range(day_start, day_start + SECONDS_PER_DAY, LOCATION_INTERVAL_S)
    noise = rng.normal(0.0, gps_sigma_m, size=(len(times), 2))
    accuracy = rng.uniform(5.0, 25.0, size=len(times))
    if not day.outings:  # all-home day: one vectorized offset pass
        lats = (persona.home_lat + noise[:, 0] / METERS_PER_DEG_LAT).tolist()
        lons = (
            persona.home_lon
            + noise[:, 1] / (METERS_PER_DEG_LAT * math.cos(math.radians(persona.home_lat)))
        ).tolist()
        acc = accuracy.tolist()
        for i, t in enumerate(times):
            records.append(SensorRecord(pid, t, LocationSample(lats[i], lons[i], acc[i])))
    else:
        last_doze_fix = -(10**12)
        for i, t in enumerate(times):
            if doze_spans and dozing(t):
                if t - last_doze_fix < DOZE_LOCATION_INTERVAL_S:
                    continue
                last_doze_fix = t
                lat, lon = persona.home_lat, persona.home_lon
            else:
                lat, lon = _position_at(day, persona, t)
            lat, lon = _offset(lat, lon, float(noise[i, 0]), float(noise[i, 1]))
            records.append(SensorRecord(pid, t, LocationSample(lat, lon, float(accuracy[i]))))

    # -- audio ------------------------------------------------------------
    # precompute, per active window, which conversation/TV seconds it overlaps
    n_windows = SECONDS_PER_DAY // AUDIO_PERIOD_S
    conv_overlaps: dict[int, list[tuple[int, int]]] = {}
    for start, end in day.conversations:
        for k in range(max(0, (start - day_start) // AUDIO_PERIOD_S), n_windows):
            w0 = day_start + k * AUDIO_PERIOD_S
            if w0 >= end:
                break
            o0, o1 = max(start, w0), min(end, w0 + AUDIO_ACTIVE_S)
            if o1 > o0:
                conv_overlaps.setdefault(k, []).append((o0 - w0, o1 - w0))
    tv_overlaps: dict[int, list[tuple[int, int]]] = {}
    for start, end in day.tv_intervals:
        for k in range(max(0, (start - day_start) // AUDIO_PERIOD_S), n_windows):
            w0 = day_start + k * AUDIO_PERIOD_S
            if w0 >= end:
                break
            o0, o1 = max(start, w0), min(end, w0 + AUDIO_ACTIVE_S)
            if o1 > o0:
                tv_overlaps.setdefault(k, []).append((o0 - w0, o1 - w0))

    quiet_energy = rng.normal(-55.0, 4.0, size=n_windows)
    quiet_voicing = rng.uniform(0.0, 0.08, size=n_windows)
    for k in range(n_windows):
        w0 = day_start + k * AUDIO_PERIOD_S
        if doze_spans and dozing(w0):
            continue  # dozing, no frames at all
        emitted = False
        for base, stop in conv_overlaps.get(k, ()):
            width = stop - base
            mask = rng.random(width) < SPEECH_SECOND_PROB
            voicing = rng.uniform(0.6, 0.95, size=width)
            energy = rng.normal(-25.0, 4.0, size=width)
            for j in range(width):
                if mask[j]:
                    off = base + j
                    records.append(
                        SensorRecord(
                            pid, w0 + off, AudioFrame(k, off, float(energy[j]), float(voicing[j]))
                        )
                    )
                    emitted = True
        if not emitted and k in tv_overlaps and not day.away_at(w0):
            for base, stop in tv_overlaps[k]:
                offs = range(base, stop, 2)
                tv_energy = rng.normal(-18.0, 4.0, size=len(offs))
                tv_voicing = rng.uniform(0.05, 0.35, size=len(offs))
                for j, off in enumerate(offs):
                    records.append(
                        SensorRecord(
                            pid,
                            w0 + off,
                            AudioFrame(k, off, float(tv_energy[j]), float(tv_voicing[j])),
                        )
                    )
                    emitted = True
        if not emitted:
            records.append(
                SensorRecord(
                    pid, w0, AudioFrame(k, 0, float(quiet_energy[k]), float(quiet_voicing[k]))
                )
            )
    records.sort(key=lambda r: r.captured_at)
    return records


def true_context(
    day: GroundTruthDay, persona: Persona, window: tuple[Timestamp, Timestamp]
) -> SocialContext:
    """Ground-truth social context for a sensing window."""
    start, end = window
    away_s = sum(
        max(0, min(o.end, end) - max(o.start, start)) for o in day.outings
    )
    location = LocationState.AWAY if away_s * 2 > (end - start) else LocationState.HOME
    with_others = any(
        min(c1, end) - max(c0, start) > 0 and c1 - c0 >= 60 for c0, c1 in day.conversations
    )
    company = CompanyState.WITH_OTHERS if with_others else CompanyState.ALONE
    return SocialContext(location, company)
