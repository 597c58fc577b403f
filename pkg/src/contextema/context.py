"""Social-context fusion: home/away timeline + conversation episodes -> one of
four contexts, and reconciliation of the detection with the participant's
confirmation answer."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .conversations import ConversationEpisode
from .errors import InvalidWindow, MissingCorrection
from .places import HomeAwayInterval, HomeAwayState
from .timebase import Timestamp


class LocationState(str, Enum):
    HOME = "home"
    AWAY = "away"


class CompanyState(str, Enum):
    ALONE = "alone"
    WITH_OTHERS = "with_others"


class ConfirmAnswer(str, Enum):
    YES = "yes"
    NO = "no"
    NO_ANSWER = "no_answer"


class ContextBasis(str, Enum):
    SENSED = "sensed"
    INSUFFICIENT = "insufficient"


@dataclass(frozen=True, slots=True)
class SocialContext:
    location: LocationState
    company: CompanyState

    def label(self) -> str:
        return f"{self.location.value}/{self.company.value}"


@dataclass(frozen=True, slots=True)
class SocialContextWindow:
    start: Timestamp
    end: Timestamp
    detected: SocialContext
    home_fraction: float
    episode_count: int
    basis: ContextBasis


@dataclass(frozen=True, slots=True)
class ContextResolution:
    detected: SocialContext
    confirmed: ConfirmAnswer
    corrected_company: Optional[CompanyState]
    effective: SocialContext

    @property
    def counts_for_accuracy(self) -> bool:
        return self.confirmed in (ConfirmAnswer.YES, ConfirmAnswer.NO)


def _overlap(a0: Timestamp, a1: Timestamp, b0: Timestamp, b1: Timestamp) -> int:
    return max(0, min(a1, b1) - max(a0, b0))


def classify_window(
    timeline: Sequence[HomeAwayInterval],
    episodes: Sequence[ConversationEpisode],
    start: Timestamp,
    end: Timestamp,
    *,
    home_threshold: float = 0.5,
    min_conv_s: int = 60,
) -> SocialContextWindow:
    """Fuse timeline and episodes over [start, end).

    home_fraction is home time over classified (home+away) time; location is
    Home iff that fraction reaches home_threshold. Company is WithOthers iff
    any episode of at least min_conv_s overlaps the window. Time not covered
    by a Home or Away interval counts as Unknown; when Unknown exceeds half
    the window the basis is Insufficient and downstream must ask the
    participant directly instead of trusting the guess.
    """
    if start >= end:
        raise InvalidWindow(f"window [{start}, {end}) is empty or inverted")

    home_s = away_s = 0
    for iv in timeline:
        o = _overlap(iv.start, iv.end, start, end)
        if o <= 0:
            continue
        if iv.state == HomeAwayState.HOME:
            home_s += o
        elif iv.state == HomeAwayState.AWAY:
            away_s += o

    classified = home_s + away_s
    home_fraction = home_s / classified if classified else 0.0
    location = LocationState.HOME if (classified and home_fraction >= home_threshold) else LocationState.AWAY

    overlapping = [
        ep
        for ep in episodes
        if ep.duration_s >= min_conv_s and _overlap(ep.start, ep.end, start, end) > 0
    ]
    company = CompanyState.WITH_OTHERS if overlapping else CompanyState.ALONE

    unknown_s = (end - start) - classified
    basis = ContextBasis.INSUFFICIENT if unknown_s * 2 > (end - start) else ContextBasis.SENSED

    return SocialContextWindow(
        start=start,
        end=end,
        detected=SocialContext(location, company),
        home_fraction=home_fraction,
        episode_count=len(overlapping),
        basis=basis,
    )


def reconcile(
    detected: SocialContext,
    confirm_answer: ConfirmAnswer,
    corrected_company: Optional[CompanyState] = None,
) -> ContextResolution:
    """Fold the participant's confirmation into an effective context.

    Yes and NoAnswer keep the detection (NoAnswer is excluded from accuracy
    statistics downstream). No replaces only the company — the follow-up
    question asks about being around others, so location is not correctable.
    """
    if confirm_answer == ConfirmAnswer.NO:
        if corrected_company is None:
            raise MissingCorrection("confirm=No requires a corrected company")
        effective = SocialContext(detected.location, corrected_company)
    else:
        corrected_company = None
        effective = detected
    return ContextResolution(
        detected=detected,
        confirmed=confirm_answer,
        corrected_company=corrected_company,
        effective=effective,
    )
