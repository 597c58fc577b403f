"""Closed-loop study runner.

Drives the engine over virtual time: renders each persona-day, feeds upload
batches at the configured cadence, runs processing ticks, answers delivered
sessions through the personas, and finally scores detected context against
ground truth. Identical (seed, config) gives identical results.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

from ..config import EngineConfig
from ..context import CompanyState, LocationState, SocialContext
from ..engine import Engine
from ..ema import EmaKind, EmaSession, SessionState
from ..engagement import GoalLevel, GoalStatus
from ..messages import MessageCategory
from ..metrics import ParticipantReport, report_to_dict
from ..timebase import SECONDS_PER_DAY, Timestamp, parse_iso
from .personas import Persona, default_cohort
from .synth import (
    GroundTruthDay,
    generate_ground_truth,
    render_sensor_traces,
    rng_for,
    true_context,
    venue_offsets,
)

DEFAULT_START = "2026-03-02T00:00:00Z"  # a Monday

_PERSONAL_TEXTS = {
    "defeatist_challenge": "Remember how well the chat at the community room went last {n}?",
    "threat_challenge": "You told me the walk to the market felt fine once you got going ({n}).",
    "social_encouragement": "Your neighbor enjoyed talking with you; another hello would land well ({n}).",
    "goal_activity_encouragement": "You are closer to your goal than last month; one step today counts ({n}).",
}

_GOAL_TITLES = ["make a close friend", "join a weekly group", "volunteer nearby"]
_STEP_TITLES = ["list places to meet people", "introduce yourself to a new person", "practice a conversation"]


@dataclass
class StudyRunConfig:
    seed: int = 0
    weeks: int = 8
    personas: list[Persona] = field(default_factory=default_cohort)
    engine_config: EngineConfig = field(default_factory=EngineConfig)
    start: Timestamp = parse_iso(DEFAULT_START)
    gps_sigma_m: float = 20.0
    full_reports: bool = True  # sweeps that only need scoring can skip these
    record_events: bool = True  # replay support; sweeps may turn it off

    def __post_init__(self):
        self.engine_config.seed = self.seed


@dataclass
class ScoreRow:
    participant_id: str
    day_index: int
    slot: str
    basis: str
    detected: Optional[str]
    truth: str
    gt_match: Optional[bool]
    confirmed: Optional[str]


@dataclass
class StudyResult:
    config: StudyRunConfig
    engine: Engine
    reports: dict[str, dict]
    scoring: list[ScoreRow]
    confirmed_accuracy: Optional[float]
    gt_match_rate: Optional[float]

    def participant_report(self, pid: str) -> dict:
        return self.reports[pid]


class _PersonaActor:
    """Answers sessions for one persona against its ground truth."""

    def __init__(self, persona: Persona, seed: int):
        self.persona = persona
        self.seed = seed
        self.truths: dict[tuple[int, str], SocialContext] = {}

    def record_truth(self, day_index: int, slot: str, ctx: SocialContext) -> None:
        self.truths[(day_index, slot)] = ctx

    def truth_for(self, session: EmaSession) -> Optional[SocialContext]:
        day_index, slot = _parse_session_id(session.session_id)
        return self.truths.get((day_index, slot))

    def wants_to_answer(self, session: EmaSession, day_index: int) -> bool:
        rng = rng_for(self.seed, self.persona.participant_id, day_index, f"answer|{session.slot}")
        return bool(rng.random() < self.persona.answer_prob(session.kind.value))

    def answer_delay_s(self, session: EmaSession, day_index: int) -> int:
        rng = rng_for(self.seed, self.persona.participant_id, day_index, f"delay|{session.slot}")
        return int(rng.integers(120, 3000))

    def value_for(self, session: EmaSession, node_id: str, rng) -> object:
        node = session.script.node(node_id)
        persona = self.persona
        truth = self.truth_for(session)
        if node_id == "confirm":
            truthful = rng.random() < persona.confirm_truthful_prob
            match = truth is not None and session.detected_context == truth
            honest = "yes" if match else "no"
            if truthful:
                return honest
            return "no" if honest == "yes" else "yes"
        if node_id == "fallback":
            if truth is None:
                return "no"
            return "yes" if truth.company == CompanyState.WITH_OTHERS else "no"
        if node_id == "ask_location":
            return truth.location.value if truth else "home"
        if node_id in ("ask_company_home", "ask_company_away"):
            if truth is None:
                return "no"
            return "yes" if truth.company == CompanyState.WITH_OTHERS else "no"
        if node_id == "plan_choice":
            choices = list(persona.action_plan_weights.items())
            total = sum(w for _, w in choices) or 1.0
            roll = rng.random() * total
            acc = 0.0
            for choice, weight in choices:
                acc += weight
                if roll < acc:
                    return choice
            return choices[-1][0]
        if node.node_id == "burst_minutes_at_home":
            return int(min(60, max(0, round(rng.normal(48.0, 10.0)))))
        if node.answer.kind == "slider":
            lo, hi = node.answer.lo, node.answer.hi
            return int(min(hi, max(lo, round(rng.normal(persona.slider_mean, 1.2)))))
        if node.answer.kind == "choice":
            return node.answer.options[0]
        return "savored a good moment today" if "savor" in node_id else "a note"


def _parse_session_id(session_id: str) -> tuple[int, str]:
    pid, day, slot = session_id.rsplit("-", 2)
    return int(day[1:]), slot


def run_study(config: StudyRunConfig, *, day_cache: Optional[dict] = None) -> StudyResult:
    """Run one closed-loop study.

    day_cache maps (participant_id, day_index) -> (ground truth, records);
    those depend only on (seed, persona, day), so callers sweeping several
    processing configs over one seed may share a cache across runs.
    """
    engine = Engine(config.engine_config, record_events=config.record_events)
    personas = {p.participant_id: p for p in config.personas}
    actors = {pid: _PersonaActor(p, config.seed) for pid, p in personas.items()}
    venues = {pid: venue_offsets(config.seed, p) for pid, p in personas.items()}

    upload_s = config.engine_config.processing.upload_interval_min * 60
    tick_s = config.engine_config.processing.processing_interval_min * 60
    transit = config.engine_config.processing.transit_s
    n_days = config.weeks * 7
    start = config.start
    end = start + n_days * SECONDS_PER_DAY

    for pid in sorted(personas):
        engine.enroll(pid, tz_offset_s=personas[pid].tz_offset_s, now=start)
        _seed_personalized_messages(engine, personas[pid], start)
        _seed_goals(engine, personas[pid], start)

    # event heap: (time, priority, seq, kind, payload); uploads before ticks
    # never tie with ticks because of the 30 s transit, answers use seq order
    heap: list = []
    seq = 0

    def push(t, priority, kind, payload):
        nonlocal seq
        heapq.heappush(heap, (t, priority, seq, kind, payload))
        seq += 1

    # the last prompt of the final day expires at 22:00, so ticking up to the
    # study end boundary settles every session without spilling past the span
    for t in range(start + tick_s, end + 1, tick_s):
        push(t, 1, "tick", None)
    push(start, 0, "day", 0)

    slot_windows = {
        s.name: s.window_local
        for s in engine.schedule.slots
        if s.window_local is not None
    }

    def schedule_day_traces(day_index: int) -> None:
        day_events = []
        for pid in sorted(personas):
            persona = personas[pid]
            day_start = start + day_index * SECONDS_PER_DAY
            cached = day_cache.get((pid, day_index)) if day_cache is not None else None
            if cached is None:
                gt = generate_ground_truth(
                    persona, day_start, day_index, config.seed, venues=venues[pid]
                )
                records = render_sensor_traces(
                    gt, persona, config.seed, day_index, gps_sigma_m=config.gps_sigma_m
                )
                if day_cache is not None:
                    day_cache[(pid, day_index)] = (gt, records)
            else:
                gt, records = cached
            for slot, (w0, w1) in slot_windows.items():
                actors[pid].record_truth(
                    day_index, slot, true_context(gt, persona, (day_start + w0, day_start + w1))
                )
            batches: dict[int, list] = {}
            for rec in records:
                batches.setdefault((rec.captured_at - start) // upload_s, []).append(rec)
            for k, batch in sorted(batches.items()):
                sent_at = start + (k + 1) * upload_s
                day_events.append((sent_at + transit, pid, sent_at, batch))
        for received_at, pid, sent_at, batch in day_events:
            push(received_at, 0, "upload", (pid, sent_at, batch))
        _daily_engagement(engine, personas, actors, config.seed, day_index, start)
        if day_index + 1 < n_days:
            push(start + (day_index + 1) * SECONDS_PER_DAY, 0, "day", day_index + 1)

    while heap:
        t, _, _, kind, payload = heapq.heappop(heap)
        if kind == "day":
            schedule_day_traces(payload)
        elif kind == "upload":
            pid, sent_at, batch = payload
            engine.ingest_batch(pid, batch, device_sent_at=sent_at, received_at=t)
        elif kind == "tick":
            delta = engine.process_tick(t)
            for sid in delta["delivered"]:
                session = engine._find_session(sid)
                day_index, _ = _parse_session_id(sid)
                actor = actors[session.participant_id]
                if actor.wants_to_answer(session, day_index):
                    push(t + actor.answer_delay_s(session, day_index), 2, "answer", sid)
        elif kind == "answer":
            _answer_session(engine, actors, payload, t)

    scoring = _score(engine, actors)
    reports = {}
    if config.full_reports:
        reports = {
            pid: report_to_dict(engine.participant_report(pid, span_end=end))
            for pid in sorted(personas)
        }
    confirmed = [row for row in scoring if row.confirmed in ("yes", "no")]
    yes = sum(1 for row in confirmed if row.confirmed == "yes")
    matches = [row for row in scoring if row.gt_match is not None]
    return StudyResult(
        config=config,
        engine=engine,
        reports=reports,
        scoring=scoring,
        confirmed_accuracy=yes / len(confirmed) if confirmed else None,
        gt_match_rate=(
            sum(1 for row in matches if row.gt_match) / len(matches) if matches else None
        ),
    )


def _answer_session(engine: Engine, actors: dict, session_id: str, now: Timestamp) -> None:
    session = engine._find_session(session_id)
    if session.state not in (SessionState.DELIVERED, SessionState.IN_PROGRESS):
        return
    actor = actors[session.participant_id]
    day_index, _ = _parse_session_id(session_id)
    rng = rng_for(actor.seed, session.participant_id, day_index, f"values|{session.slot}")
    t = now
    while session.state in (SessionState.DELIVERED, SessionState.IN_PROGRESS):
        node_id = session.current_node_id
        value = actor.value_for(session, node_id, rng)
        engine.submit_answer(session_id, node_id, value, t)
        t += 20


def _seed_personalized_messages(engine: Engine, persona: Persona, now: Timestamp) -> None:
    for category, count in sorted(persona.personalized_messages.items()):
        template = _PERSONAL_TEXTS[category]
        for i in range(count):
            engine.add_message(
                persona.participant_id,
                MessageCategory(category),
                template.format(n=f"week {i + 1}"),
                now=now,
            )


def _seed_goals(engine: Engine, persona: Persona, now: Timestamp) -> None:
    pid = persona.participant_id
    for i in range(persona.long_term_goals):
        lt = engine.upsert_goal(pid, None, GoalLevel.LONG_TERM, _GOAL_TITLES[i % len(_GOAL_TITLES)])
        for j in range(persona.short_per_long):
            st = engine.upsert_goal(pid, lt.goal_id, GoalLevel.SHORT_TERM, f"short-term {i}.{j}")
            for k in range(persona.steps_per_short):
                engine.upsert_goal(
                    pid, st.goal_id, GoalLevel.STEP, _STEP_TITLES[k % len(_STEP_TITLES)]
                )


def _daily_engagement(
    engine: Engine,
    personas: dict[str, Persona],
    actors: dict[str, _PersonaActor],
    seed: int,
    day_index: int,
    start: Timestamp,
) -> None:
    """Small daily chance of activity logging and step completion."""
    now = start + day_index * SECONDS_PER_DAY + 20 * 3600  # evenings
    for pid in sorted(personas):
        persona = personas[pid]
        rng = rng_for(seed, pid, day_index, "engage")
        if rng.random() < persona.activities_per_week / 7.0:
            anticipated = int(min(7, max(1, round(rng.normal(persona.slider_mean, 1.0)))))
            log = engine.plan_activity(pid, "planned social activity", anticipated)
            experienced = int(min(7, max(1, round(rng.normal(persona.slider_mean + 0.8, 1.0)))))
            engine.complete_activity(pid, log.activity_id, experienced, "took a photo", now=now + 600)
        if rng.random() < persona.steps_completed_per_week / 7.0:
            book = engine.store.participants[pid].engagement
            open_steps = [
                g.goal_id
                for g in book.goals.values()
                if g.level == GoalLevel.STEP and g.status == GoalStatus.OPEN
            ]
            if open_steps:
                engine.complete_step(pid, open_steps[0], now=now + 1200)


def _score(engine: Engine, actors: dict[str, _PersonaActor]) -> list[ScoreRow]:
    rows: list[ScoreRow] = []
    for pid in engine.store.ids():
        state = engine.store.participants[pid]
        for sid in state.session_order:
            session = state.sessions[sid]
            if session.kind != EmaKind.CONTEXTUAL:
                continue
            day_index, slot = _parse_session_id(sid)
            truth = actors[pid].truths.get((day_index, slot))
            if truth is None:
                continue
            detected = session.detected_context
            rows.append(
                ScoreRow(
                    participant_id=pid,
                    day_index=day_index,
                    slot=slot,
                    basis=session.basis.value if session.basis else "sensed",
                    detected=detected.label() if detected else None,
                    truth=truth.label(),
                    gt_match=(detected == truth) if detected is not None else None,
                    confirmed=(
                        session.resolution.confirmed.value if session.resolution else None
                    ),
                )
            )
    return rows
