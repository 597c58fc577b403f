"""EMA scripting: daily prompt schedule, branching script construction
(action plan, contextual confirm -> appraise -> challenge -> savor, burst
items), and session state transitions.

Scripts are acyclic node graphs built from an editable bank of item texts;
the two context prompts (confirm and fallback) are fixed templates because
their wording is part of the intervention contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional, Sequence

from .context import (
    CompanyState,
    ConfirmAnswer,
    ContextBasis,
    ContextResolution,
    LocationState,
    SocialContext,
    SocialContextWindow,
    reconcile,
)
from .errors import (
    CategoryMismatch,
    InactiveParticipant,
    InvalidScript,
    SessionExpired,
    ValueOutOfDomain,
    WrongNode,
)
from .messages import MessageCategory, SelectedMessage, category_for_context
from .timebase import Timestamp, parse_hhmm

CONFIRM_TEMPLATE = "I think you have been {location} and {company} in the {slot}; am I right?"
FALLBACK_TEMPLATE = "Sorry that we got it wrong! Were you around others this {slot}?"

_LOCATION_PHRASE = {LocationState.HOME: "home", LocationState.AWAY: "away"}
_COMPANY_PHRASE = {CompanyState.WITH_OTHERS: "around other people", CompanyState.ALONE: "alone"}


class EmaKind(str, Enum):
    ACTION_PLAN = "action_plan"
    CONTEXTUAL = "contextual"
    BURST = "burst"


class SessionState(str, Enum):
    DELIVERED = "delivered"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    EXPIRED = "expired"


class ActionPlanChoice(str, Enum):
    INTERACT_WITH_SOMEONE = "interact_with_someone"
    FUN_ACTIVITY_OUT_OF_HOME = "fun_activity_out_of_home"
    GOAL_STEP = "goal_step"
    CUSTOM_GOAL = "custom_goal"


@dataclass(frozen=True, slots=True)
class AnswerSpec:
    kind: str  # "choice" | "slider" | "text"
    options: tuple[str, ...] = ()
    lo: int = 1
    hi: int = 7

    def validate(self, value) -> None:
        if self.kind == "choice":
            if str(value) not in self.options:
                raise ValueOutOfDomain(f"{value!r} not in {self.options}")
        elif self.kind == "slider":
            if not isinstance(value, int) or isinstance(value, bool) or not self.lo <= value <= self.hi:
                raise ValueOutOfDomain(f"{value!r} outside slider {self.lo}..{self.hi}")
        elif self.kind == "text":
            if not isinstance(value, str) or not value.strip():
                raise ValueOutOfDomain("free-text answer must be a nonempty string")
        else:
            raise ValueOutOfDomain(f"unknown answer kind {self.kind!r}")


@dataclass(frozen=True, slots=True)
class ScriptNode:
    node_id: str
    prompt: str
    answer: AnswerSpec
    branch: tuple[tuple[str, str], ...] = ()  # answer value -> next node
    next: Optional[str] = None

    def next_for(self, value) -> Optional[str]:
        for answer_value, target in self.branch:
            if answer_value == str(value):
                return target
        return self.next


@dataclass(frozen=True)
class EmaScript:
    script_id: str
    kind: EmaKind
    entry: str
    nodes: tuple[ScriptNode, ...]

    def node(self, node_id: str) -> ScriptNode:
        return self._by_id[node_id]

    @property
    def _by_id(self) -> dict[str, ScriptNode]:
        cached = self.__dict__.get("_by_id_cache")
        if cached is None:
            cached = {n.node_id: n for n in self.nodes}
            self.__dict__["_by_id_cache"] = cached
        return cached

    def validate(self) -> "EmaScript":
        by_id = self._by_id
        if len(by_id) != len(self.nodes):
            raise InvalidScript("duplicate node ids")
        if self.entry not in by_id:
            raise InvalidScript(f"entry node {self.entry!r} missing")
        targets = [t for n in self.nodes for _, t in n.branch] + [
            n.next for n in self.nodes if n.next is not None
        ]
        for t in targets:
            if t not in by_id:
                raise InvalidScript(f"branch target {t!r} missing")
        # cycle check over the full graph
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {nid: WHITE for nid in by_id}

        def visit(nid: str) -> None:
            color[nid] = GRAY
            node = by_id[nid]
            succ = {t for _, t in node.branch}
            if node.next is not None:
                succ.add(node.next)
            for t in succ:
                if color[t] == GRAY:
                    raise InvalidScript(f"cycle through {t!r}")
                if color[t] == WHITE:
                    visit(t)
            color[nid] = BLACK

        for nid in by_id:
            if color[nid] == WHITE:
                visit(nid)
        return self


@dataclass(frozen=True, slots=True)
class BurstItem:
    item_id: str
    prompt: str
    kind: str  # "slider" | "minutes"
    lo: int
    hi: int

    def answer_spec(self) -> AnswerSpec:
        return AnswerSpec(kind="slider", lo=self.lo, hi=self.hi)


# -- script bank --------------------------------------------------------------


class ScriptBank:
    """Editable item-text bank backing script construction.

    Loads the packaged defaults unless explicit file contents are given.
    """

    def __init__(
        self,
        script_records: Optional[Iterable[dict]] = None,
        burst_records: Optional[Iterable[dict]] = None,
    ):
        if script_records is None:
            script_records = _load_jsonl(_read_data("script_bank.jsonl"))
        if burst_records is None:
            burst_records = _load_jsonl(_read_data("burst_items.jsonl"))
        self._scripts: dict[str, dict] = {}
        self._fragments: dict[str, list[dict]] = {}
        for rec in script_records:
            if rec.get("kind") == "fragment":
                self._fragments[rec["script_id"]] = rec["items"]
            else:
                self._scripts[rec["script_id"]] = rec
        self.burst_items: tuple[BurstItem, ...] = tuple(
            BurstItem(r["item_id"], r["prompt"], r["kind"], int(r["lo"]), int(r["hi"]))
            for r in burst_records
        )

    def appraisal_items(self, category: MessageCategory) -> list[dict]:
        key = (
            "appraisal_threat_v1"
            if category == MessageCategory.THREAT_CHALLENGE
            else "appraisal_defeatist_v1"
        )
        return self._fragments[key]

    def savor_prompt(self) -> str:
        return self._fragments["savor_v1"][0]["prompt"]

    def action_plan_script(self, burst_items: Sequence[BurstItem] = ()) -> EmaScript:
        raw = self._scripts["action_plan_v1"]
        nodes = [
            ScriptNode(
                node_id=n["node_id"],
                prompt=n["prompt"],
                answer=AnswerSpec(
                    kind=n["answer"]["kind"],
                    options=tuple(n["answer"].get("options", ())),
                    lo=int(n["answer"].get("lo", 1)),
                    hi=int(n["answer"].get("hi", 7)),
                ),
                branch=tuple((k, v) for k, v in (n.get("branch") or {}).items()),
                next=n.get("next"),
            )
            for n in raw["nodes"]
        ]
        nodes = _append_burst(nodes, burst_items)
        return EmaScript(
            script_id=raw["script_id"],
            kind=EmaKind.ACTION_PLAN,
            entry=raw["entry"],
            nodes=tuple(nodes),
        ).validate()


def _read_data(name: str) -> str:
    return resources.files("contextema.data").joinpath(name).read_text(encoding="utf-8")


def _load_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _append_burst(nodes: list[ScriptNode], burst_items: Sequence[BurstItem]) -> list[ScriptNode]:
    """Route every terminal edge through the burst chain."""
    if not burst_items:
        return nodes
    entry = f"burst_{burst_items[0].item_id}"
    rewired = [
        ScriptNode(n.node_id, n.prompt, n.answer, n.branch, entry if n.next is None else n.next)
        for n in nodes
    ]
    chain = []
    for i, item in enumerate(burst_items):
        nxt = f"burst_{burst_items[i + 1].item_id}" if i + 1 < len(burst_items) else None
        chain.append(ScriptNode(f"burst_{item.item_id}", item.prompt, item.answer_spec(), (), nxt))
    return rewired + chain


# -- contextual script construction -------------------------------------------


def slot_word_for_window(window_end_local_s: int) -> str:
    """Which part of day a sensing window describes (by its end time)."""
    if window_end_local_s <= parse_hhmm("12:00"):
        return "morning"
    if window_end_local_s <= parse_hhmm("18:00"):
        return "afternoon"
    return "evening"


def confirm_prompt(context: SocialContext, slot_word: str) -> str:
    return CONFIRM_TEMPLATE.format(
        location=_LOCATION_PHRASE[context.location],
        company=_COMPANY_PHRASE[context.company],
        slot=slot_word,
    )


def fallback_prompt(slot_word: str) -> str:
    return FALLBACK_TEMPLATE.format(slot=slot_word)


def _tail_nodes(
    prefix: str,
    location: LocationState,
    company: CompanyState,
    message_text: str,
    bank: ScriptBank,
) -> tuple[str, list[ScriptNode]]:
    """Appraisal sliders -> challenge -> (savor when around others)."""
    effective = SocialContext(location, company)
    items = bank.appraisal_items(category_for_context(effective))
    nodes: list[ScriptNode] = []
    ids = [f"{prefix}_{item['node_id']}" for item in items]
    ids.append(f"{prefix}_challenge")
    with_savor = company == CompanyState.WITH_OTHERS
    if with_savor:
        ids.append(f"{prefix}_savor")
    for i, item in enumerate(items):
        nodes.append(
            ScriptNode(ids[i], item["prompt"], AnswerSpec("slider", lo=1, hi=7), (), ids[i + 1])
        )
    challenge_next = ids[len(items) + 1] if with_savor else None
    nodes.append(
        ScriptNode(
            f"{prefix}_challenge",
            message_text,
            AnswerSpec("choice", options=("ok",)),
            (),
            challenge_next,
        )
    )
    if with_savor:
        nodes.append(ScriptNode(f"{prefix}_savor", bank.savor_prompt(), AnswerSpec("text"), (), None))
    return ids[0], nodes


def build_contextual_script(
    window: SocialContextWindow,
    message: SelectedMessage,
    bank: ScriptBank,
    *,
    slot_word: str,
    burst_items: Sequence[BurstItem] = (),
    script_id: str = "contextual",
) -> EmaScript:
    """Sensed-context script: confirm -> (No -> fallback) -> appraisal ->
    challenge -> savor-on-with-others.

    The message must carry the category that the detected context calls for.
    """
    detected = window.detected
    expected = category_for_context(detected)
    if message.message.category != expected:
        raise CategoryMismatch(
            f"{message.message.category.value} message for a {expected.value} context"
        )

    with_entry, with_nodes = _tail_nodes(
        "w", detected.location, CompanyState.WITH_OTHERS, message.message.text, bank
    )
    alone_entry, alone_nodes = _tail_nodes(
        "a", detected.location, CompanyState.ALONE, message.message.text, bank
    )
    detected_entry = with_entry if detected.company == CompanyState.WITH_OTHERS else alone_entry

    confirm = ScriptNode(
        "confirm",
        confirm_prompt(detected, slot_word),
        AnswerSpec("choice", options=("yes", "no", "skip")),
        (("yes", detected_entry), ("no", "fallback"), ("skip", detected_entry)),
        None,
    )
    fallback = ScriptNode(
        "fallback",
        fallback_prompt(slot_word),
        AnswerSpec("choice", options=("yes", "no")),
        (("yes", with_entry), ("no", alone_entry)),
        None,
    )
    nodes = _append_burst([confirm, fallback, *with_nodes, *alone_nodes], burst_items)
    return EmaScript(script_id, EmaKind.CONTEXTUAL, "confirm", tuple(nodes)).validate()


def build_direct_ask_script(
    challenge_messages: dict[MessageCategory, SelectedMessage],
    bank: ScriptBank,
    *,
    slot_word: str,
    burst_items: Sequence[BurstItem] = (),
    script_id: str = "contextual_direct",
) -> EmaScript:
    """Insufficient-basis variant: ask location and company outright, then
    run the matching appraisal/challenge flow.

    Needs one defeatist and one threat message because the branch taken is
    unknown until the participant answers; both draws are logged as shown.
    """
    try:
        defeatist = challenge_messages[MessageCategory.DEFEATIST_CHALLENGE]
        threat = challenge_messages[MessageCategory.THREAT_CHALLENGE]
    except KeyError as exc:
        raise CategoryMismatch(f"direct-ask script needs a {exc.args[0]} message") from None

    with_entry, with_nodes = _tail_nodes(
        "w", LocationState.AWAY, CompanyState.WITH_OTHERS, defeatist.message.text, bank
    )
    home_alone_entry, home_alone_nodes = _tail_nodes(
        "ha", LocationState.HOME, CompanyState.ALONE, threat.message.text, bank
    )
    away_alone_entry, away_alone_nodes = _tail_nodes(
        "aa", LocationState.AWAY, CompanyState.ALONE, defeatist.message.text, bank
    )

    ask_location = ScriptNode(
        "ask_location",
        f"We could not sense enough this {slot_word}. Were you mostly home or away this {slot_word}?",
        AnswerSpec("choice", options=("home", "away")),
        (("home", "ask_company_home"), ("away", "ask_company_away")),
        None,
    )
    company_prompt = f"Were you around others this {slot_word}?"
    ask_company_home = ScriptNode(
        "ask_company_home",
        company_prompt,
        AnswerSpec("choice", options=("yes", "no")),
        (("yes", with_entry), ("no", home_alone_entry)),
        None,
    )
    ask_company_away = ScriptNode(
        "ask_company_away",
        company_prompt,
        AnswerSpec("choice", options=("yes", "no")),
        (("yes", with_entry), ("no", away_alone_entry)),
        None,
    )
    nodes = _append_burst(
        [ask_location, ask_company_home, ask_company_away, *with_nodes, *home_alone_nodes, *away_alone_nodes],
        burst_items,
    )
    return EmaScript(script_id, EmaKind.CONTEXTUAL, "ask_location", tuple(nodes)).validate()


# -- schedule ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SlotSpec:
    name: str
    kind: EmaKind
    fire_local_s: int
    window_local: Optional[tuple[int, int]] = None


def default_slots() -> tuple[SlotSpec, ...]:
    return (
        SlotSpec("morning", EmaKind.ACTION_PLAN, parse_hhmm("08:00")),
        SlotSpec("noon", EmaKind.CONTEXTUAL, parse_hhmm("12:00"), (parse_hhmm("06:00"), parse_hhmm("12:00"))),
        SlotSpec("evening", EmaKind.CONTEXTUAL, parse_hhmm("18:00"), (parse_hhmm("12:00"), parse_hhmm("18:00"))),
    )


@dataclass(frozen=True)
class DailySchedule:
    slots: tuple[SlotSpec, ...] = field(default_factory=default_slots)

    def __post_init__(self):
        fires = [s.fire_local_s for s in self.slots]
        if fires != sorted(fires) or len(set(fires)) != len(fires):
            raise ValueError("slot fire times must be strictly increasing")
        for s in self.slots:
            if s.window_local is not None and s.window_local[1] != s.fire_local_s:
                raise ValueError(f"slot {s.name}: sensing window must end at the fire time")


@dataclass(frozen=True, slots=True)
class PendingPrompt:
    slot: str
    kind: EmaKind
    due_at: Timestamp
    window: Optional[tuple[Timestamp, Timestamp]]
    burst: bool


def schedule_day(
    day_start_utc: Timestamp,
    schedule: DailySchedule,
    burst_week: bool,
    *,
    active: bool = True,
) -> list[PendingPrompt]:
    """The day's prompts (exactly one per configured slot, default 3)."""
    if not active:
        raise InactiveParticipant("participant not active on this date")
    prompts = []
    for s in schedule.slots:
        window = None
        if s.window_local is not None:
            window = (day_start_utc + s.window_local[0], day_start_utc + s.window_local[1])
        prompts.append(PendingPrompt(s.name, s.kind, day_start_utc + s.fire_local_s, window, burst_week))
    return prompts


# -- sessions ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class AnswerRecord:
    node_id: str
    value: object
    answered_at: Timestamp


@dataclass
class EmaSession:
    session_id: str
    participant_id: str
    script: EmaScript
    kind: EmaKind
    slot: str
    delivered_at: Timestamp
    expires_at: Timestamp
    state: SessionState = SessionState.DELIVERED
    answers: list[AnswerRecord] = field(default_factory=list)
    detected_context: Optional[SocialContext] = None
    basis: Optional[ContextBasis] = None
    resolution: Optional[ContextResolution] = None
    direct_context: Optional[SocialContext] = None
    message_ids: tuple[str, ...] = ()

    @property
    def current_node_id(self) -> Optional[str]:
        cur: Optional[str] = self.script.entry
        for answer in self.answers:
            if cur is None:
                return None
            cur = self.script.node(cur).next_for(answer.value)
        return cur

    @property
    def answered(self) -> bool:
        return self.state == SessionState.COMPLETED

    def answer_value(self, node_id: str):
        for a in self.answers:
            if a.node_id == node_id:
                return a.value
        return None


def advance(session: EmaSession, node_id: str, value, now: Timestamp) -> EmaSession:
    """Record one answer and move the session along its script.

    Expired sessions accept nothing; answers must target the current node
    and fit its answer domain; answering a terminal node completes the
    session.
    """
    if session.state == SessionState.EXPIRED:
        raise SessionExpired(session.session_id)
    if now >= session.expires_at:
        session.state = SessionState.EXPIRED
        _refresh_context(session)
        raise SessionExpired(session.session_id)
    if session.state == SessionState.COMPLETED:
        raise WrongNode("session already completed")
    current = session.current_node_id
    if node_id != current:
        raise WrongNode(f"expected answer for {current!r}, got {node_id!r}")
    node = session.script.node(node_id)
    node.answer.validate(value)
    session.answers.append(AnswerRecord(node_id, value, now))
    session.state = (
        SessionState.COMPLETED if node.next_for(value) is None else SessionState.IN_PROGRESS
    )
    _refresh_context(session)
    return session


def expire_if_due(session: EmaSession, now: Timestamp) -> bool:
    """Lazily expire a stale session; returns True if the state changed."""
    if session.state in (SessionState.DELIVERED, SessionState.IN_PROGRESS) and now >= session.expires_at:
        session.state = SessionState.EXPIRED
        _refresh_context(session)
        return True
    return False


def _refresh_context(session: EmaSession) -> None:
    """Derive the context resolution (or direct-ask context) from answers."""
    if session.detected_context is not None:
        confirm = session.answer_value("confirm")
        if confirm == "yes":
            session.resolution = reconcile(session.detected_context, ConfirmAnswer.YES)
        elif confirm == "skip":
            session.resolution = reconcile(session.detected_context, ConfirmAnswer.NO_ANSWER)
        elif confirm == "no":
            fb = session.answer_value("fallback")
            if fb is not None:
                corrected = CompanyState.WITH_OTHERS if fb == "yes" else CompanyState.ALONE
                session.resolution = reconcile(session.detected_context, ConfirmAnswer.NO, corrected)
        if session.resolution is None and session.state == SessionState.EXPIRED:
            session.resolution = reconcile(session.detected_context, ConfirmAnswer.NO_ANSWER)
    elif session.basis == ContextBasis.INSUFFICIENT:
        loc = session.answer_value("ask_location")
        comp = session.answer_value("ask_company_home") or session.answer_value("ask_company_away")
        if loc is not None and comp is not None:
            session.direct_context = SocialContext(
                LocationState(loc),
                CompanyState.WITH_OTHERS if comp == "yes" else CompanyState.ALONE,
            )


def effective_context(session: EmaSession) -> Optional[SocialContext]:
    if session.resolution is not None:
        return session.resolution.effective
    return session.direct_context


def session_to_dict(session: EmaSession) -> dict:
    """Stable dict form for persistence, HTTP payloads, and replay diffing."""
    res = session.resolution
    return {
        "session_id": session.session_id,
        "participant_id": session.participant_id,
        "kind": session.kind.value,
        "slot": session.slot,
        "delivered_at": session.delivered_at,
        "expires_at": session.expires_at,
        "state": session.state.value,
        "script": {
            "script_id": session.script.script_id,
            "entry": session.script.entry,
            "nodes": [
                {
                    "node_id": n.node_id,
                    "prompt": n.prompt,
                    "answer": {
                        "kind": n.answer.kind,
                        "options": list(n.answer.options),
                        "lo": n.answer.lo,
                        "hi": n.answer.hi,
                    },
                    "branch": {k: v for k, v in n.branch},
                    "next": n.next,
                }
                for n in session.script.nodes
            ],
        },
        "answers": [[a.node_id, a.value, a.answered_at] for a in session.answers],
        "detected_context": session.detected_context.label() if session.detected_context else None,
        "basis": session.basis.value if session.basis else None,
        "confirmed": res.confirmed.value if res else None,
        "effective_context": (
            effective_context(session).label() if effective_context(session) else None
        ),
        "message_ids": list(session.message_ids),
        "current_node": session.current_node_id,
    }
