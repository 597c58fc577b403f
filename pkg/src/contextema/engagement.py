"""Goal hierarchy, pleasurable-activity logging, and the awards wheel."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    AlreadyCompleted,
    BadParentLevel,
    CompleteBeforePlan,
    RatingOutOfDomain,
)
from .timebase import Timestamp

DIAMONDS_MIN = 1
DIAMONDS_MAX = 5

PLEASURE_MIN = 1
PLEASURE_MAX = 7


class GoalLevel(str, Enum):
    LONG_TERM = "long_term"
    SHORT_TERM = "short_term"
    STEP = "step"


class GoalStatus(str, Enum):
    OPEN = "open"
    COMPLETED = "completed"


class ActivityStatus(str, Enum):
    PLANNED = "planned"
    DONE = "done"


class AwardSource(str, Enum):
    GOAL_STEP = "goal_step"
    ACTIVITY = "activity"


@dataclass
class GoalNode:
    goal_id: str
    parent: Optional[str]
    level: GoalLevel
    title: str
    status: GoalStatus = GoalStatus.OPEN
    created_in_session: bool = False


@dataclass
class ActivityLog:
    activity_id: str
    title: str
    anticipated_pleasure: int
    experienced_pleasure: Optional[int] = None
    savor_artifact: Optional[str] = None
    status: ActivityStatus = ActivityStatus.PLANNED

    @property
    def pleasure_delta(self) -> Optional[int]:
        if self.experienced_pleasure is None:
            return None
        return self.experienced_pleasure - self.anticipated_pleasure


@dataclass(frozen=True, slots=True)
class AwardEntry:
    earned_at: Timestamp
    source: AwardSource
    source_id: str
    diamonds: int


@dataclass
class AwardLedger:
    participant_id: str
    entries: list[AwardEntry] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(e.diamonds for e in self.entries)


_PARENT_LEVEL = {
    GoalLevel.LONG_TERM: None,
    GoalLevel.SHORT_TERM: GoalLevel.LONG_TERM,
    GoalLevel.STEP: GoalLevel.SHORT_TERM,
}


def _check_rating(value: int, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not PLEASURE_MIN <= value <= PLEASURE_MAX:
        raise RatingOutOfDomain(f"{name} must be an integer in {PLEASURE_MIN}..{PLEASURE_MAX}")
    return value


@dataclass
class EngagementBook:
    """One participant's goals, activities, and award ledger.

    Writes are expected on the participant's serialized command stream.
    """

    participant_id: str
    goals: dict[str, GoalNode] = field(default_factory=dict)
    activities: dict[str, ActivityLog] = field(default_factory=dict)
    ledger: AwardLedger = None  # type: ignore[assignment]
    _next_goal: int = 0
    _next_activity: int = 0

    def __post_init__(self):
        if self.ledger is None:
            self.ledger = AwardLedger(self.participant_id)

    def upsert_goal_node(
        self,
        parent: Optional[str],
        level: GoalLevel,
        title: str,
        *,
        created_in_session: bool = False,
    ) -> GoalNode:
        level = GoalLevel(level)
        required = _PARENT_LEVEL[level]
        if required is None:
            if parent is not None:
                raise BadParentLevel("long-term goals cannot have a parent")
        else:
            parent_node = self.goals.get(parent or "")
            if parent_node is None or parent_node.level != required:
                raise BadParentLevel(f"{level.value} requires a {required.value} parent")
        node = GoalNode(
            goal_id=f"g{self._next_goal:04d}",
            parent=parent,
            level=level,
            title=title,
            created_in_session=created_in_session,
        )
        self._next_goal += 1
        self.goals[node.goal_id] = node
        return node

    def plan_activity(self, title: str, anticipated_pleasure: int) -> ActivityLog:
        _check_rating(anticipated_pleasure, "anticipated_pleasure")
        log = ActivityLog(
            activity_id=f"act{self._next_activity:04d}",
            title=title,
            anticipated_pleasure=anticipated_pleasure,
        )
        self._next_activity += 1
        self.activities[log.activity_id] = log
        return log

    def complete_activity(
        self,
        activity_id: str,
        experienced_pleasure: int,
        savor_artifact: Optional[str],
        rng: random.Random,
        earned_at: Timestamp,
    ) -> AwardEntry:
        log = self.activities.get(activity_id)
        if log is None:
            raise CompleteBeforePlan(f"activity {activity_id!r} was never planned")
        if log.status == ActivityStatus.DONE:
            raise AlreadyCompleted(activity_id)
        _check_rating(experienced_pleasure, "experienced_pleasure")
        log.experienced_pleasure = experienced_pleasure
        log.savor_artifact = savor_artifact
        log.status = ActivityStatus.DONE
        return self._spin(AwardSource.ACTIVITY, activity_id, rng, earned_at)

    def complete_step(self, goal_id: str, rng: random.Random, earned_at: Timestamp) -> AwardEntry:
        node = self.goals.get(goal_id)
        if node is None:
            raise BadParentLevel(f"no goal {goal_id!r}")
        if node.level != GoalLevel.STEP:
            raise BadParentLevel("only goal steps spin the awards wheel")
        if node.status == GoalStatus.COMPLETED:
            raise AlreadyCompleted(goal_id)
        node.status = GoalStatus.COMPLETED
        return self._spin(AwardSource.GOAL_STEP, goal_id, rng, earned_at)

    def _spin(
        self, source: AwardSource, source_id: str, rng: random.Random, earned_at: Timestamp
    ) -> AwardEntry:
        entry = AwardEntry(earned_at, source, source_id, rng.randint(DIAMONDS_MIN, DIAMONDS_MAX))
        self.ledger.entries.append(entry)
        return entry

    def goals_to_csv(self) -> str:
        lines = ["goal_id,parent,level,title,status"]
        for g in self.goals.values():
            lines.append(f"{g.goal_id},{g.parent or ''},{g.level.value},{g.title},{g.status.value}")
        return "\n".join(lines) + "\n"

    def activities_to_csv(self) -> str:
        lines = ["activity_id,anticipated,experienced,status"]
        for a in self.activities.values():
            exp = "" if a.experienced_pleasure is None else a.experienced_pleasure
            lines.append(f"{a.activity_id},{a.anticipated_pleasure},{exp},{a.status.value}")
        return "\n".join(lines) + "\n"
