"""Synthetic participant personas: daily routine, conversation habits,
device behavior, and EMA answering style. Personas are test fixtures, not
patient models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Persona:
    participant_id: str
    home_lat: float = 43.7022
    home_lon: float = -72.2896
    tz_offset_s: int = 0

    # daily routine (local hours)
    sleep_start_h: float = 23.0
    sleep_end_h: float = 7.0
    outing_prob: float = 0.6
    max_outings: int = 2
    outing_start_range_h: tuple[float, float] = (9.0, 15.0)
    outing_duration_range_h: tuple[float, float] = (1.0, 3.0)
    n_venues: int = 3

    # conversations: hourly Poisson base rates plus scheduled social hours
    conv_rate_home_per_h: float = 0.11
    conv_rate_away_per_h: float = 0.45
    social_hours: dict[int, float] = field(default_factory=lambda: {11: 0.16, 17: 0.16})
    conv_duration_range_s: tuple[int, int] = (480, 2100)
    conv_short_frac: float = 0.12
    conv_short_range_s: tuple[int, int] = (75, 150)
    conv_trend_per_week: float = 0.0
    tv_hours: tuple[int, ...] = ()

    # device behavior
    phone_carry_prob: float = 1.0

    # EMA answering
    answer_prob_action_plan: float = 0.9
    answer_prob_contextual: float = 0.8
    confirm_truthful_prob: float = 1.0
    slider_mean: float = 4.0
    action_plan_weights: dict[str, float] = field(
        default_factory=lambda: {
            "interact_with_someone": 0.6,
            "fun_activity_out_of_home": 0.2,
            "goal_step": 0.15,
            "custom_goal": 0.05,
        }
    )

    # engagement behavior
    long_term_goals: int = 2
    short_per_long: int = 2
    steps_per_short: int = 2
    activities_per_week: float = 2.0
    steps_completed_per_week: float = 1.0
    personalized_messages: dict[str, int] = field(
        default_factory=lambda: {"defeatist_challenge": 4, "threat_challenge": 3}
    )

    def answer_prob(self, kind: str) -> float:
        if kind == "action_plan":
            return self.answer_prob_action_plan
        return self.answer_prob_contextual

    @classmethod
    def from_dict(cls, raw: dict) -> "Persona":
        kwargs = dict(raw)
        for key in ("outing_start_range_h", "outing_duration_range_h", "conv_duration_range_s",
                    "conv_short_range_s", "tv_hours"):
            if key in kwargs and isinstance(kwargs[key], list):
                kwargs[key] = tuple(kwargs[key])
        if "social_hours" in kwargs:  # JSON object keys arrive as strings
            kwargs["social_hours"] = {int(h): p for h, p in kwargs["social_hours"].items()}
        return cls(**kwargs)


def default_cohort() -> list[Persona]:
    """Five desk-scale personas spanning the behavior range: an out-and-about
    improver, a phone-leaver with low contextual adherence, a TV-heavy
    homebody, a routine-social regular, and a quiet low-rate participant."""
    return [
        Persona(
            "p-ava",
            outing_prob=0.9,
            max_outings=2,
            outing_start_range_h=(8.5, 13.0),
            outing_duration_range_h=(1.5, 3.5),
            conv_rate_away_per_h=0.5,
            conv_trend_per_week=0.08,
            answer_prob_action_plan=1.0,
            answer_prob_contextual=0.85,
            slider_mean=4.2,
            action_plan_weights={
                "interact_with_someone": 0.9,
                "fun_activity_out_of_home": 0.05,
                "goal_step": 0.05,
                "custom_goal": 0.0,
            },
            long_term_goals=3,
            activities_per_week=3.0,
            personalized_messages={"defeatist_challenge": 6, "social_encouragement": 5,
                                   "threat_challenge": 1, "goal_activity_encouragement": 1},
        ),
        Persona(
            "p-ben",
            home_lat=43.6901,
            home_lon=-72.2751,
            outing_prob=0.7,
            outing_duration_range_h=(2.0, 4.0),
            phone_carry_prob=0.3,
            answer_prob_action_plan=0.89,
            answer_prob_contextual=0.21,
            slider_mean=3.4,
            conv_rate_home_per_h=0.10,
            personalized_messages={"threat_challenge": 4, "defeatist_challenge": 3},
        ),
        Persona(
            "p-cal",
            home_lat=43.7155,
            home_lon=-72.3012,
            outing_prob=0.25,
            tv_hours=(13, 14, 15, 19, 20, 21),
            conv_rate_home_per_h=0.10,
            social_hours={11: 0.18, 17: 0.18},
            answer_prob_contextual=0.75,
            slider_mean=3.0,
        ),
        Persona(
            "p-dia",
            home_lat=43.6988,
            home_lon=-72.2603,
            outing_prob=0.55,
            social_hours={11: 0.18, 17: 0.18},
            conv_rate_home_per_h=0.11,
            answer_prob_contextual=0.85,
            slider_mean=4.8,
        ),
        Persona(
            "p-eli",
            home_lat=43.7203,
            home_lon=-72.2799,
            outing_prob=0.45,
            conv_rate_home_per_h=0.09,
            conv_rate_away_per_h=0.35,
            social_hours={11: 0.15, 17: 0.15},
            answer_prob_contextual=0.7,
            slider_mean=3.6,
            personalized_messages={},
        ),
    ]
