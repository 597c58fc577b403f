"""Context classification vs interval-arithmetic recomputation, and the
confirmation reconciliation rules."""

import random

import pytest

from contextema.context import (
    CompanyState,
    ConfirmAnswer,
    ContextBasis,
    LocationState,
    SocialContext,
    classify_window,
    reconcile,
)
from contextema.conversations import ConversationEpisode
from contextema.errors import InvalidWindow, MissingCorrection
from contextema.places import HomeAwayInterval, HomeAwayState

H, A, U = HomeAwayState.HOME, HomeAwayState.AWAY, HomeAwayState.UNKNOWN


def episode(start, duration):
    return ConversationEpisode(start, duration, -25.0, (0, 0))


def test_full_home_window_no_episodes_is_home_alone():
    timeline = [HomeAwayInterval(0, 21600, H)]
    ctx = classify_window(timeline, [], 0, 21600)
    assert ctx.detected == SocialContext(LocationState.HOME, CompanyState.ALONE)
    assert ctx.home_fraction == 1.0
    assert ctx.basis == ContextBasis.SENSED


def test_away_window_with_episode_is_away_with_others():
    timeline = [HomeAwayInterval(0, 21600, A)]
    ctx = classify_window(timeline, [episode(3000, 300)], 0, 21600)
    assert ctx.detected == SocialContext(LocationState.AWAY, CompanyState.WITH_OTHERS)
    assert ctx.episode_count == 1


def test_short_episode_does_not_flip_company():
    timeline = [HomeAwayInterval(0, 21600, H)]
    ctx = classify_window(timeline, [episode(3000, 45)], 0, 21600, min_conv_s=60)
    assert ctx.detected.company == CompanyState.ALONE


def test_majority_unknown_is_insufficient():
    timeline = [
        HomeAwayInterval(0, 4000, H),
        HomeAwayInterval(4000, 21600, U),
    ]
    ctx = classify_window(timeline, [], 0, 21600)
    assert ctx.basis == ContextBasis.INSUFFICIENT
    # uncovered time counts as unknown too
    ctx2 = classify_window([HomeAwayInterval(0, 4000, H)], [], 0, 21600)
    assert ctx2.basis == ContextBasis.INSUFFICIENT


def test_invalid_window_rejected():
    with pytest.raises(InvalidWindow):
        classify_window([], [], 100, 100)


def test_random_windows_match_interval_arithmetic_oracle():
    rng = random.Random(31)
    for _ in range(100):
        start, end = 0, 21600
        # random alternating timeline covering the window
        t, timeline = start, []
        while t < end:
            span = rng.randrange(600, 7200)
            state = rng.choice([H, A, U])
            timeline.append(HomeAwayInterval(t, min(t + span, end), state))
            t += span
        episodes = [
            episode(rng.randrange(start - 3600, end), rng.randrange(30, 3600))
            for _ in range(rng.randrange(0, 4))
        ]
        threshold = rng.choice([0.3, 0.5, 0.7])
        ctx = classify_window(timeline, episodes, start, end, home_threshold=threshold)

        # oracle: second-by-second recount at coarse resolution via direct sums
        home_s = sum(
            max(0, min(iv.end, end) - max(iv.start, start))
            for iv in timeline
            if iv.state == H
        )
        away_s = sum(
            max(0, min(iv.end, end) - max(iv.start, start))
            for iv in timeline
            if iv.state == A
        )
        frac = home_s / (home_s + away_s) if home_s + away_s else 0.0
        expect_home = bool(home_s + away_s) and frac >= threshold
        assert ctx.home_fraction == pytest.approx(frac)
        assert (ctx.detected.location == LocationState.HOME) == expect_home
        overlapping = [
            e for e in episodes if e.duration_s >= 60 and e.start < end and e.end > start
        ]
        assert (ctx.detected.company == CompanyState.WITH_OTHERS) == bool(overlapping)
        assert ctx.episode_count == len(overlapping)
        unknown = (end - start) - home_s - away_s
        assert (ctx.basis == ContextBasis.INSUFFICIENT) == (unknown * 2 > end - start)


def test_episode_order_does_not_matter():
    timeline = [HomeAwayInterval(0, 21600, H)]
    eps = [episode(1000, 300), episode(9000, 120), episode(15000, 600)]
    a = classify_window(timeline, eps, 0, 21600)
    b = classify_window(timeline, list(reversed(eps)), 0, 21600)
    assert a == b


def test_adding_episode_never_flips_with_others_to_alone():
    timeline = [HomeAwayInterval(0, 21600, H)]
    base = classify_window(timeline, [episode(1000, 300)], 0, 21600)
    more = classify_window(timeline, [episode(1000, 300), episode(5000, 300)], 0, 21600)
    assert base.detected.company == CompanyState.WITH_OTHERS
    assert more.detected.company == CompanyState.WITH_OTHERS


def test_reconcile_yes_passes_detection_through():
    detected = SocialContext(LocationState.HOME, CompanyState.ALONE)
    res = reconcile(detected, ConfirmAnswer.YES)
    assert res.effective == detected
    assert res.counts_for_accuracy


def test_reconcile_no_corrects_company_only():
    detected = SocialContext(LocationState.HOME, CompanyState.WITH_OTHERS)
    res = reconcile(detected, ConfirmAnswer.NO, CompanyState.ALONE)
    assert res.effective == SocialContext(LocationState.HOME, CompanyState.ALONE)
    assert res.effective.location == detected.location  # location never changes
    assert res.counts_for_accuracy


def test_reconcile_no_answer_keeps_detection_but_excluded():
    detected = SocialContext(LocationState.AWAY, CompanyState.ALONE)
    res = reconcile(detected, ConfirmAnswer.NO_ANSWER)
    assert res.effective == detected
    assert not res.counts_for_accuracy


def test_reconcile_no_requires_correction():
    with pytest.raises(MissingCorrection):
        reconcile(SocialContext(LocationState.HOME, CompanyState.ALONE), ConfirmAnswer.NO)
