"""Duty-cycled two-stage conversation detection over derived audio frames.

Stage 1 flags per-second speech presence inside each active window (voicing
and energy must both clear their thresholds — the voicing gate is what
rejects TV-like sound). Stage 2 marks windows conversation-positive by
speech density and merges nearby positive windows into episodes carrying
only start, duration, and mean amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import MixedWindow, UnsortedInput
from .records import KIND_AUDIO, SensorRecord
from .timebase import SECONDS_PER_DAY, Timestamp
from .validation import check_positive


@dataclass(frozen=True, slots=True)
class DutyCycle:
    period_s: int = 600
    active_s: int = 60

    def __post_init__(self):
        check_positive(self.active_s, "active_s")
        if self.active_s > self.period_s:
            raise ValueError("active_s must not exceed period_s")


@dataclass(frozen=True, slots=True)
class SpeechFlags:
    """Per-second speech booleans for one active window.

    speech_energies holds the frame energies of the flagged seconds, in
    offset order, so episode amplitude can be averaged without re-reading
    frames.
    """

    window_id: int
    start: Timestamp
    flags: tuple[bool, ...]
    speech_energies: tuple[float, ...] = ()

    @property
    def speech_seconds(self) -> int:
        return sum(self.flags)


@dataclass(frozen=True, slots=True)
class ConversationEpisode:
    start: Timestamp
    duration_s: int
    mean_energy_db: float
    window_span: tuple[int, int]

    @property
    def end(self) -> Timestamp:
        return self.start + self.duration_s


def duty_cycle_windows(day_start: Timestamp, cycle: DutyCycle) -> list[tuple[int, Timestamp]]:
    """(window_id, start) pairs for one day: windows at day_start + k * period."""
    count = SECONDS_PER_DAY // cycle.period_s
    return [(k, day_start + k * cycle.period_s) for k in range(count)]


def detect_speech(
    frames: Sequence[SensorRecord],
    voicing_min: float,
    energy_min_db: float,
    *,
    window_start: Timestamp | None = None,
    active_s: int = 60,
) -> SpeechFlags:
    """Stage 1: per-second speech flags for one window's frames.

    A second is speech iff a frame exists at that offset with
    voicing >= voicing_min and energy_db >= energy_min_db; seconds without
    frames are false. All frames must belong to one window.
    """
    window_id = -1
    flags = [False] * active_s
    energy_at: dict[int, float] = {}
    start = window_start
    for rec in frames:
        frame = rec.payload
        if window_id == -1:
            window_id = frame.window_id
        elif frame.window_id != window_id:
            raise MixedWindow(f"frames span windows {window_id} and {frame.window_id}")
        if start is None:
            start = rec.captured_at - frame.offset_s
        if 0 <= frame.offset_s < active_s and frame.voicing >= voicing_min and frame.energy_db >= energy_min_db:
            flags[frame.offset_s] = True
            energy_at[frame.offset_s] = frame.energy_db
    energies = tuple(energy_at[o] for o in sorted(energy_at))
    return SpeechFlags(window_id, start if start is not None else 0, tuple(flags), energies)


def segment_conversations(
    flag_windows: Sequence[SpeechFlags],
    *,
    density_min: float = 0.25,
    window_merge_gap: int = 1,
    period_s: int = 600,
) -> list[ConversationEpisode]:
    """Stage 2: merge conversation-positive windows into episodes.

    A window is positive iff speech_seconds / len(flags) >= density_min.
    Positive windows separated by at most window_merge_gap negative or
    missing window slots join one episode. Episode duration runs from the
    first positive window's start to the last positive window's active end.
    """
    starts = [fw.start for fw in flag_windows]
    if starts != sorted(starts):
        raise UnsortedInput("flag windows must be sorted by window start")

    positives = [
        fw
        for fw in flag_windows
        if fw.flags and fw.speech_seconds / len(fw.flags) >= density_min
    ]
    episodes: list[ConversationEpisode] = []
    run: list[SpeechFlags] = []

    def flush(run: list[SpeechFlags]) -> None:
        if not run:
            return
        energies = [e for fw in run for e in fw.speech_energies]
        first, last = run[0], run[-1]
        duration = (last.start + len(last.flags)) - first.start
        episodes.append(
            ConversationEpisode(
                start=first.start,
                duration_s=int(duration),
                mean_energy_db=sum(energies) / len(energies) if energies else 0.0,
                window_span=(first.window_id, last.window_id),
            )
        )

    for fw in positives:
        if run:
            slots_between = round((fw.start - run[-1].start) / period_s) - 1
            if slots_between > window_merge_gap:
                flush(run)
                run = []
        run.append(fw)
    flush(run)
    return episodes


def detect_episodes(
    records: Iterable[SensorRecord],
    *,
    voicing_min: float = 0.5,
    energy_min_db: float = -40.0,
    density_min: float = 0.25,
    window_merge_gap: int = 1,
    period_s: int = 600,
    active_s: int = 60,
) -> list[ConversationEpisode]:
    """Run both stages over a stream of audio records.

    Frames are grouped into windows by their derived start
    (captured_at - offset_s), which is stable across days even though
    window ids restart daily.
    """
    by_window: dict[Timestamp, list[SensorRecord]] = {}
    for rec in records:
        if rec.kind != KIND_AUDIO:
            continue
        by_window.setdefault(rec.captured_at - rec.payload.offset_s, []).append(rec)

    flag_windows = [
        detect_speech(
            frames,
            voicing_min,
            energy_min_db,
            window_start=start,
            active_s=active_s,
        )
        for start, frames in sorted(by_window.items())
    ]
    return segment_conversations(
        flag_windows,
        density_min=density_min,
        window_merge_gap=window_merge_gap,
        period_s=period_s,
    )


def episodes_to_csv(participant_id: str, episodes: Sequence[ConversationEpisode]) -> str:
    from .timebase import format_iso

    lines = ["participant_id,start,duration_s,mean_energy_db"]
    for ep in episodes:
        lines.append(
            f"{participant_id},{format_iso(ep.start)},{ep.duration_s},{ep.mean_energy_db:.2f}"
        )
    return "\n".join(lines) + "\n"


class ConversationDetector(BaseEstimator, TransformerMixin):
    """Stateless transformer: audio records in, conversation episodes out."""

    def __init__(
        self,
        period_s: int = 600,
        active_s: int = 60,
        voicing_min: float = 0.5,
        energy_min_db: float = -40.0,
        density_min: float = 0.25,
        window_merge_gap: int = 1,
    ):
        self.period_s = period_s
        self.active_s = active_s
        self.voicing_min = voicing_min
        self.energy_min_db = energy_min_db
        self.density_min = density_min
        self.window_merge_gap = window_merge_gap

    def fit(self, X=None, y=None) -> "ConversationDetector":
        DutyCycle(self.period_s, self.active_s)  # validates the cycle
        return self

    def transform(self, X: Iterable[SensorRecord]) -> list[ConversationEpisode]:
        return detect_episodes(
            X,
            voicing_min=self.voicing_min,
            energy_min_db=self.energy_min_db,
            density_min=self.density_min,
            window_merge_gap=self.window_merge_gap,
            period_s=self.period_s,
            active_s=self.active_s,
        )
