"""Duty-cycle windows, speech flagging vs a per-frame oracle, and episode
segmentation vs a run-merging oracle."""

import random

import pytest

from contextema.conversations import (
    ConversationDetector,
    DutyCycle,
    SpeechFlags,
    detect_episodes,
    detect_speech,
    duty_cycle_windows,
    segment_conversations,
)
from contextema.errors import MixedWindow, UnsortedInput
from contextema.records import AudioFrame, SensorRecord

from .oracles import merge_positive_runs


def frame(ts, window, offset, energy=-25.0, voicing=0.8, pid="p1"):
    return SensorRecord(pid, ts, AudioFrame(window, offset, energy, voicing))


def test_default_cycle_has_144_windows():
    windows = duty_cycle_windows(0, DutyCycle())
    assert len(windows) == 144
    assert windows[0] == (0, 0)
    assert windows[72] == (72, 72 * 600)  # noon


def test_degenerate_cycle_covers_whole_day():
    windows = duty_cycle_windows(0, DutyCycle(period_s=60, active_s=60))
    assert len(windows) == 1440
    assert [start for _, start in windows[:3]] == [0, 60, 120]


def test_cycle_validation():
    with pytest.raises(ValueError):
        DutyCycle(period_s=60, active_s=61)
    with pytest.raises(Exception):
        DutyCycle(period_s=600, active_s=0)


def test_no_frames_gives_all_false_flags():
    flags = detect_speech([], 0.5, -40.0, window_start=0)
    assert not any(flags.flags)
    assert len(flags.flags) == 60


def test_thresholds_must_both_pass():
    start = 7200
    loud_voiced = frame(start + 10, 12, 10, energy=-20.0, voicing=0.9)
    flags = detect_speech([loud_voiced], 0.5, -40.0, window_start=start)
    assert flags.flags[10] is True
    # TV-like: plenty of energy, no voicing
    tv = frame(start + 11, 12, 11, energy=-15.0, voicing=0.2)
    flags = detect_speech([tv], 0.5, -40.0, window_start=start)
    assert not any(flags.flags)
    # whisper-level energy fails the energy gate
    quiet = frame(start + 12, 12, 12, energy=-55.0, voicing=0.9)
    flags = detect_speech([quiet], 0.5, -40.0, window_start=start)
    assert not any(flags.flags)


def test_mixed_window_rejected():
    with pytest.raises(MixedWindow):
        detect_speech([frame(0, 1, 0), frame(600, 2, 0)], 0.5, -40.0, window_start=0)


def test_random_windows_match_per_frame_oracle():
    rng = random.Random(5)
    for _ in range(1000):
        window_start = rng.randrange(0, 86400, 600)
        n = rng.randrange(0, 25)
        offsets = rng.sample(range(60), n)
        frames = [
            frame(
                window_start + o,
                window_start // 600,
                o,
                energy=rng.uniform(-70, -10),
                voicing=rng.random(),
            )
            for o in offsets
        ]
        vmin, emin = 0.5, -40.0
        flags = detect_speech(frames, vmin, emin, window_start=window_start)
        expected = [False] * 60
        for r in frames:  # independent per-frame recheck
            if r.payload.voicing >= vmin and r.payload.energy_db >= emin:
                expected[r.payload.offset_s] = True
        assert list(flags.flags) == expected


def make_flag_window(slot, positive, active_s=60, period_s=600):
    seconds = 30 if positive else 5  # density 0.5 vs ~0.08
    flags = tuple(i < seconds for i in range(active_s))
    energies = tuple(-25.0 for _ in range(seconds))
    return SpeechFlags(slot, slot * period_s, flags, energies)


def test_all_below_density_yields_no_episodes():
    windows = [make_flag_window(i, False) for i in range(10)]
    assert segment_conversations(windows) == []


def test_single_positive_window_is_one_minute_episode():
    episodes = segment_conversations([make_flag_window(4, True)])
    assert len(episodes) == 1
    assert episodes[0].start == 4 * 600
    assert episodes[0].duration_s == 60
    assert episodes[0].window_span == (4, 4)
    assert episodes[0].mean_energy_db == pytest.approx(-25.0)


def test_unsorted_windows_rejected():
    with pytest.raises(UnsortedInput):
        segment_conversations([make_flag_window(5, True), make_flag_window(2, True)])


def test_segmentation_matches_run_merging_oracle():
    rng = random.Random(123)
    for _ in range(10_000):
        n_slots = rng.randrange(1, 30)
        merge_gap = rng.randrange(0, 3)
        slots = sorted(rng.sample(range(40), n_slots))
        windows = [make_flag_window(s, rng.random() < 0.45) for s in slots]
        episodes = segment_conversations(windows, window_merge_gap=merge_gap)

        positives = [(fw.start // 600, fw.start) for fw in windows if sum(fw.flags) >= 15]
        runs = merge_positive_runs(positives, merge_gap)
        assert len(episodes) == len(runs)
        for ep, run in zip(episodes, runs):
            assert ep.start == run[0][1]
            assert ep.duration_s == run[-1][1] + 60 - run[0][1]


def test_merge_gap_zero_counts_exact_runs():
    pattern = [True, True, False, True, False, False, True, True, True]
    windows = [make_flag_window(i, p) for i, p in enumerate(pattern)]
    episodes = segment_conversations(windows, window_merge_gap=0)
    assert len(episodes) == 3  # runs: [0,1], [3], [6,7,8]
    episodes_merged = segment_conversations(windows, window_merge_gap=1)
    assert len(episodes_merged) == 2  # single-negative gaps bridge


def test_raising_density_never_adds_positive_windows():
    rng = random.Random(77)
    windows = []
    for slot in range(20):
        seconds = rng.randrange(0, 60)
        flags = tuple(i < seconds for i in range(60))
        windows.append(SpeechFlags(slot, slot * 600, flags, tuple(-25.0 for _ in range(seconds))))
    counts = []
    for dmin in (0.1, 0.25, 0.5, 0.75):
        episodes = segment_conversations(windows, density_min=dmin, window_merge_gap=0)
        counts.append(sum(ep.window_span[1] - ep.window_span[0] + 1 for ep in episodes))
    assert counts == sorted(counts, reverse=True)


def test_episodes_disjoint_and_ordered():
    rng = random.Random(8)
    windows = [make_flag_window(s, rng.random() < 0.5) for s in range(40)]
    episodes = segment_conversations(windows)
    for left, right in zip(episodes, episodes[1:]):
        assert left.end <= right.start


def test_detector_transform_over_records():
    # conversation 10:03-10:28 emits voiced frames; TV afterwards emits
    # unvoiced high-energy frames; detector must find exactly the speech
    records = []
    for window_start in (36600, 37200, 37800):  # 10:10, 10:20, 10:30
        for o in range(0, 60, 2):
            records.append(frame(window_start + o, window_start // 600, o))
    for window_start in (64800, 65400):  # TV in the evening
        for o in range(60):
            records.append(frame(window_start + o, window_start // 600, o, energy=-15.0, voicing=0.25))
    episodes = ConversationDetector().fit().transform(records)
    assert len(episodes) == 1
    assert episodes[0].start == 36600
    assert episodes[0].duration_s == 37860 - 36600


def test_episode_output_carries_no_speech_content():
    import dataclasses

    from contextema.conversations import ConversationEpisode

    field_types = {f.name: f.type for f in dataclasses.fields(ConversationEpisode)}
    assert set(field_types) == {"start", "duration_s", "mean_energy_db", "window_span"}
