"""Report computations: adherence, detection accuracy, sensing coverage,
weekly conversation/home-time aggregates, burst-item summaries, and the
challenge-message mix. All pure functions over store snapshots."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

from .context import ConfirmAnswer, ContextResolution
from .conversations import ConversationEpisode
from .ema import EmaKind, EmaSession, SessionState
from .messages import SelectionLogEntry
from .places import HomeAwayInterval, HomeAwayState
from .records import KIND_AUDIO, KIND_LOCATION, SensorRecord
from .timebase import SECONDS_PER_DAY, Timestamp


@dataclass
class AdherenceReport:
    delivered: int
    answered: int
    rate: float
    by_kind: dict[str, tuple[int, int, float]]

    @property
    def rate_percent(self) -> int:
        return round(self.rate * 100)

    def answered_mix(self) -> dict[str, float]:
        """Share of answered sessions per kind (the contextual/action-plan mix)."""
        if not self.answered:
            return {}
        return {kind: a / self.answered for kind, (_, a, _) in self.by_kind.items() if a}


def adherence(sessions: Iterable[EmaSession]) -> AdherenceReport:
    delivered = answered = 0
    per_kind: dict[str, list[int]] = {}
    for s in sessions:
        counts = per_kind.setdefault(s.kind.value, [0, 0])
        delivered += 1
        counts[0] += 1
        if s.state == SessionState.COMPLETED:
            answered += 1
            counts[1] += 1
    by_kind = {
        kind: (d, a, a / d if d else 0.0) for kind, (d, a) in sorted(per_kind.items())
    }
    return AdherenceReport(
        delivered=delivered,
        answered=answered,
        rate=answered / delivered if delivered else 0.0,
        by_kind=by_kind,
    )


@dataclass
class AccuracyReport:
    confirmed_yes: int
    confirmed_no: int
    excluded_no_answer: int
    accuracy: Optional[float]

    @property
    def accuracy_percent(self) -> Optional[int]:
        return None if self.accuracy is None else round(self.accuracy * 100)


def detection_accuracy(resolutions: Iterable[ContextResolution]) -> AccuracyReport:
    """Participant-confirmed accuracy: yes / (yes + no), NoAnswer excluded."""
    yes = no = skipped = 0
    for r in resolutions:
        if r.confirmed == ConfirmAnswer.YES:
            yes += 1
        elif r.confirmed == ConfirmAnswer.NO:
            no += 1
        else:
            skipped += 1
    total = yes + no
    return AccuracyReport(
        confirmed_yes=yes,
        confirmed_no=no,
        excluded_no_answer=skipped,
        accuracy=yes / total if total else None,
    )


@dataclass
class DayCoverage:
    day_start: Timestamp
    location_h: float
    audio_h: float

    def meets(self, target_hours: float) -> bool:
        return self.location_h >= target_hours and self.audio_h >= target_hours


@dataclass
class CoverageReport:
    days: list[DayCoverage]
    target_hours: float
    fraction_days_at_target: float


def _covered_seconds(times: Sequence[int], day_start: int, day_end: int, max_gap_s: int) -> int:
    """Measure of the union of [t_i, t_{i+1}] spans with gaps <= max_gap_s,
    padded at both day edges when the edge gap is within the rule."""
    if not times:
        return 0
    covered = 0
    if times[0] - day_start <= max_gap_s:
        covered += times[0] - day_start
    for a, b in zip(times, times[1:]):
        if b - a <= max_gap_s:
            covered += b - a
    if day_end - times[-1] <= max_gap_s:
        covered += day_end - times[-1]
    return covered


def coverage(
    records: Iterable[SensorRecord],
    span: tuple[Timestamp, Timestamp],
    *,
    target_hours: float = 18.0,
    location_gap_max_s: int = 600,
    audio_period_s: int = 600,
    tz_offset_s: int = 0,
) -> CoverageReport:
    """Per-day sensed hours for location and audio over the study span.

    Location: consecutive-sample spans with gaps up to location_gap_max_s
    count as covered. Audio: each duty-cycle window with at least one frame
    covers its whole period. A compliant day needs both streams at
    target_hours.
    """
    loc_times: dict[int, list[int]] = {}
    aud_windows: dict[int, set[int]] = {}
    start, end = span
    for r in records:
        local = r.captured_at + tz_offset_s
        day = local // SECONDS_PER_DAY
        if r.kind == KIND_LOCATION:
            loc_times.setdefault(day, []).append(local)
        elif r.kind == KIND_AUDIO:
            window_start = local - r.payload.offset_s
            aud_windows.setdefault(day, set()).add(window_start // audio_period_s)

    days: list[DayCoverage] = []
    first_day = (start + tz_offset_s) // SECONDS_PER_DAY
    last_day = (end - 1 + tz_offset_s) // SECONDS_PER_DAY
    for day in range(first_day, last_day + 1):
        d0, d1 = day * SECONDS_PER_DAY, (day + 1) * SECONDS_PER_DAY
        times = sorted(loc_times.get(day, []))
        loc_s = _covered_seconds(times, d0, d1, location_gap_max_s)
        aud_s = len(aud_windows.get(day, ())) * audio_period_s
        days.append(
            DayCoverage(
                day_start=d0 - tz_offset_s,
                location_h=loc_s / 3600.0,
                audio_h=min(aud_s, SECONDS_PER_DAY) / 3600.0,
            )
        )
    at_target = sum(1 for d in days if d.meets(target_hours))
    return CoverageReport(
        days=days,
        target_hours=target_hours,
        fraction_days_at_target=at_target / len(days) if days else 0.0,
    )


@dataclass(frozen=True, slots=True)
class WeeklyAggregate:
    week_index: int
    iso_week: str
    conversation_count: int
    home_time_h: float


def _iso_week_key(t: Timestamp) -> tuple[int, int]:
    iso = datetime.fromtimestamp(t, tz=timezone.utc).isocalendar()
    return (iso[0], iso[1])


def weekly_aggregate(
    episodes: Iterable[ConversationEpisode],
    timeline: Iterable[HomeAwayInterval],
    span: tuple[Timestamp, Timestamp],
) -> list[WeeklyAggregate]:
    """Episode counts and home hours per ISO week across the span."""
    start, end = span
    week_keys: list[tuple[int, int]] = []
    t = start
    while t < end:
        key = _iso_week_key(t)
        if not week_keys or week_keys[-1] != key:
            week_keys.append(key)
        t += SECONDS_PER_DAY
    counts = {key: 0 for key in week_keys}
    home_s = {key: 0 for key in week_keys}

    for ep in episodes:
        key = _iso_week_key(ep.start)
        if key in counts:
            counts[key] += 1
    for iv in timeline:
        if iv.state != HomeAwayState.HOME:
            continue
        t = iv.start
        while t < iv.end:
            day_end = t - (t % SECONDS_PER_DAY) + SECONDS_PER_DAY
            chunk_end = min(iv.end, day_end)
            key = _iso_week_key(t)
            if key in home_s:
                home_s[key] += chunk_end - t
            t = chunk_end

    return [
        WeeklyAggregate(i, f"{key[0]}-W{key[1]:02d}", counts[key], home_s[key] / 3600.0)
        for i, key in enumerate(week_keys)
    ]


@dataclass
class BurstSummary:
    time_point: int  # study week of the burst
    item_means: dict[str, float]
    item_counts: dict[str, int]


def burst_summary(
    answers: Iterable[tuple[int, str, int]], time_point: int
) -> BurstSummary:
    """Mean per burst item over answered instances at one time point.

    answers: (time_point, item_id, value) triples.
    """
    sums: dict[str, int] = {}
    counts: dict[str, int] = {}
    for tp, item_id, value in answers:
        if tp != time_point:
            continue
        sums[item_id] = sums.get(item_id, 0) + value
        counts[item_id] = counts.get(item_id, 0) + 1
    means = {item: sums[item] / counts[item] for item in sorted(sums)}
    return BurstSummary(time_point=time_point, item_means=means, item_counts=dict(sorted(counts.items())))


def message_mix(selection_log: Iterable[SelectionLogEntry]) -> dict[str, float]:
    """Fraction of selections per category; empty log gives an empty map."""
    counts: dict[str, int] = {}
    total = 0
    for entry in selection_log:
        counts[entry.category.value] = counts.get(entry.category.value, 0) + 1
        total += 1
    if not total:
        return {}
    return {cat: counts[cat] / total for cat in sorted(counts)}


def message_mix_percent(mix: dict[str, float]) -> dict[str, int]:
    return {cat: round(frac * 100) for cat, frac in mix.items()}


@dataclass
class ParticipantReport:
    participant_id: str
    adherence: AdherenceReport
    accuracy: AccuracyReport
    coverage: CoverageReport
    weekly: list[WeeklyAggregate]
    message_mix: dict[str, float]
    bursts: list[BurstSummary]
    goals_total: int = 0
    activities_total: int = 0
    diamonds_total: int = 0
    context_windows: int = 0


def report_to_dict(report: ParticipantReport) -> dict:
    return {
        "participant_id": report.participant_id,
        "adherence": {
            "delivered": report.adherence.delivered,
            "answered": report.adherence.answered,
            "rate": report.adherence.rate,
            "rate_percent": report.adherence.rate_percent,
            "by_kind": {
                kind: {"delivered": d, "answered": a, "rate": r}
                for kind, (d, a, r) in report.adherence.by_kind.items()
            },
            "answered_mix": report.adherence.answered_mix(),
        },
        "accuracy": {
            "confirmed_yes": report.accuracy.confirmed_yes,
            "confirmed_no": report.accuracy.confirmed_no,
            "excluded_no_answer": report.accuracy.excluded_no_answer,
            "accuracy": report.accuracy.accuracy,
            "accuracy_percent": report.accuracy.accuracy_percent,
        },
        "coverage": {
            "target_hours": report.coverage.target_hours,
            "fraction_days_at_target": report.coverage.fraction_days_at_target,
            "days": [
                {"day_start": d.day_start, "location_h": round(d.location_h, 3), "audio_h": round(d.audio_h, 3)}
                for d in report.coverage.days
            ],
        },
        "weekly": [
            {
                "week_index": w.week_index,
                "iso_week": w.iso_week,
                "conversation_count": w.conversation_count,
                "home_time_h": round(w.home_time_h, 3),
            }
            for w in report.weekly
        ],
        "message_mix": report.message_mix,
        "message_mix_percent": message_mix_percent(report.message_mix),
        "bursts": [
            {
                "time_point": b.time_point,
                "item_means": {k: round(v, 3) for k, v in b.item_means.items()},
                "item_counts": b.item_counts,
            }
            for b in report.bursts
        ],
        "goals_total": report.goals_total,
        "activities_total": report.activities_total,
        "diamonds_total": report.diamonds_total,
        "context_windows": report.context_windows,
    }
