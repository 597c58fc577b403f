"""Therapist message bank: personalized + generic challenge messages by
category, with the 60/40 personalized/generic draw and least-recently-shown
repeat avoidance."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .context import CompanyState, LocationState, SocialContext
from .errors import EmptyGenericPool, EmptyText
from .timebase import Timestamp

PERSONALIZED_SHARE = 0.6


class MessageCategory(str, Enum):
    DEFEATIST_CHALLENGE = "defeatist_challenge"
    THREAT_CHALLENGE = "threat_challenge"
    SOCIAL_ENCOURAGEMENT = "social_encouragement"
    GOAL_ACTIVITY_ENCOURAGEMENT = "goal_activity_encouragement"


class MessagePool(str, Enum):
    PERSONALIZED = "personalized"
    GENERIC = "generic"


class MessageAuthor(str, Enum):
    THERAPIST = "therapist"
    SEED = "seed"


@dataclass(frozen=True, slots=True)
class Message:
    message_id: str
    participant_scope: Optional[str]
    category: MessageCategory
    text: str
    created_by: MessageAuthor
    created_at: Timestamp


@dataclass(frozen=True, slots=True)
class SelectedMessage:
    message: Message
    pool: MessagePool
    drawn_at: Timestamp


@dataclass(frozen=True, slots=True)
class SelectionLogEntry:
    drawn_at: Timestamp
    participant_id: str
    category: MessageCategory
    message_id: str
    pool: MessagePool


def category_for_context(context: SocialContext) -> MessageCategory:
    """Home-alone contexts get threat challenges; every other context gets
    defeatist challenges."""
    if context.location == LocationState.HOME and context.company == CompanyState.ALONE:
        return MessageCategory.THREAT_CHALLENGE
    return MessageCategory.DEFEATIST_CHALLENGE


@dataclass
class MessageBank:
    """Message storage plus per-participant show history.

    Reads are safe to share; add_message and select_message mutate and are
    expected to run on the owning participant's serialized command stream.
    """

    personalized_share: float = PERSONALIZED_SHARE
    _messages: list[Message] = field(default_factory=list)
    _next_id: int = 0
    # (participant_id, message_id) -> (show_count, last_shown_at)
    _history: dict[tuple[str, str], tuple[int, Timestamp]] = field(default_factory=dict)
    selection_log: list[SelectionLogEntry] = field(default_factory=list)

    def add_message(
        self,
        scope: Optional[str],
        category: MessageCategory,
        text: str,
        *,
        created_by: MessageAuthor = MessageAuthor.THERAPIST,
        created_at: Timestamp = 0,
    ) -> Message:
        if not text or not text.strip():
            raise EmptyText("message text must be nonempty")
        message = Message(
            message_id=f"m{self._next_id:06d}",
            participant_scope=scope,
            category=MessageCategory(category),
            text=text,
            created_by=created_by,
            created_at=created_at,
        )
        self._next_id += 1
        self._messages.append(message)
        return message

    def messages(
        self, *, participant_id: Optional[str] = None, category: Optional[MessageCategory] = None
    ) -> list[Message]:
        """Generic messages plus the participant's own personalized ones."""
        out = []
        for m in self._messages:
            if m.participant_scope is not None and m.participant_scope != participant_id:
                continue
            if category is not None and m.category != category:
                continue
            out.append(m)
        return out

    def _pool(self, participant_id: str, category: MessageCategory, pool: MessagePool) -> list[Message]:
        if pool == MessagePool.PERSONALIZED:
            return [
                m
                for m in self._messages
                if m.participant_scope == participant_id and m.category == category
            ]
        return [m for m in self._messages if m.participant_scope is None and m.category == category]

    def _pick_least_recent(
        self, participant_id: str, pool: list[Message], rng: random.Random
    ) -> Message:
        def shown_key(m: Message) -> tuple[int, int]:
            count, last = self._history.get((participant_id, m.message_id), (0, -1))
            return (count, last)

        best = min(shown_key(m) for m in pool)
        candidates = [m for m in pool if shown_key(m) == best]
        return candidates[rng.randrange(len(candidates))]

    def select_message(
        self,
        participant_id: str,
        category: MessageCategory,
        rng: random.Random,
        *,
        drawn_at: Timestamp = 0,
    ) -> SelectedMessage:
        """Draw one message for a contextual prompt.

        Personalized pool wins with probability personalized_share when the
        participant has personalized messages in the category; otherwise the
        generic pool is certain. Within a pool the least-recently-shown
        message wins, ties by uniform draw. The draw is recorded for repeat
        avoidance and the selection log.
        """
        generic = self._pool(participant_id, category, MessagePool.GENERIC)
        if not generic:
            raise EmptyGenericPool(f"no generic messages seeded for {category.value}")
        personalized = self._pool(participant_id, category, MessagePool.PERSONALIZED)

        if personalized and rng.random() < self.personalized_share:
            pool_kind, pool = MessagePool.PERSONALIZED, personalized
        else:
            pool_kind, pool = MessagePool.GENERIC, generic

        message = self._pick_least_recent(participant_id, pool, rng)
        count, _ = self._history.get((participant_id, message.message_id), (0, -1))
        self._history[(participant_id, message.message_id)] = (count + 1, drawn_at)
        self.selection_log.append(
            SelectionLogEntry(drawn_at, participant_id, category, message.message_id, pool_kind)
        )
        return SelectedMessage(message=message, pool=pool_kind, drawn_at=drawn_at)

    def show_counts(self, participant_id: str, pool: Sequence[Message]) -> dict[str, int]:
        return {
            m.message_id: self._history.get((participant_id, m.message_id), (0, -1))[0]
            for m in pool
        }

    def load_seed_file(self, text: str) -> int:
        """Load generic seed messages from 'category<TAB>text' lines."""
        loaded = 0
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            category, _, body = line.partition("\t")
            self.add_message(
                None, MessageCategory(category.strip()), body.strip(), created_by=MessageAuthor.SEED
            )
            loaded += 1
        return loaded
