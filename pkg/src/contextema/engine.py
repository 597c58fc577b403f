"""Service orchestration: enrollment, upload ingestion, processing ticks
that refresh derived context and deliver EMA sessions, answer handling, and
report assembly.

Everything runs against an injectable "now" so the simulator can drive weeks
of virtual time; derived state is a pure function of (event history, config,
seed), which `Engine.replay` exploits.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .config import EngineConfig
from .context import ContextBasis, classify_window
from .conversations import detect_episodes
from .ema import (
    EmaKind,
    EmaSession,
    PendingPrompt,
    ScriptBank,
    SessionState,
    advance,
    build_contextual_script,
    build_direct_ask_script,
    expire_if_due,
    schedule_day,
    session_to_dict,
    slot_word_for_window,
)
from .engagement import AwardEntry, GoalLevel, GoalNode
from .errors import UnknownParticipant
from .messages import (
    Message,
    MessageBank,
    MessageCategory,
    category_for_context,
)
from .metrics import (
    ParticipantReport,
    adherence,
    burst_summary,
    coverage,
    detection_accuracy,
    message_mix,
    weekly_aggregate,
)
from .places import build_place_model, home_away_timeline
from .records import KIND_AUDIO, KIND_LOCATION, SensorRecord, parse_trace
from .store import (
    EventLog,
    ParticipantProfile,
    ParticipantState,
    Store,
    iter_resolutions,
    sessions_in_order,
)
from .timebase import SECONDS_PER_DAY, Timestamp, local_day_start

SECONDS_PER_WEEK = 7 * SECONDS_PER_DAY


class Engine:
    def __init__(
        self,
        config: Optional[EngineConfig] = None,
        *,
        script_bank: Optional[ScriptBank] = None,
        seed_generic_messages: bool = True,
        record_events: bool = True,
    ):
        self.config = config or EngineConfig()
        self.store = Store()
        self.script_bank = script_bank or ScriptBank()
        self.message_bank = MessageBank(personalized_share=self.config.messages.personalized_share)
        if seed_generic_messages:
            from .ema import _read_data

            self.message_bank.load_seed_file(_read_data("generic_messages.txt"))
        self.schedule = self.config.ema.schedule()
        self.last_tick_at: Optional[Timestamp] = None
        self._record_events = record_events
        self._msg_rng: dict[str, random.Random] = {}
        self._wheel_rng: dict[str, random.Random] = {}
        self._ids_cache: list[str] = []

    # -- event plumbing ----------------------------------------------------

    def _record(self, kind: str, **payload) -> None:
        if self._record_events:
            self.store.log.append({"kind": kind, **payload})

    @classmethod
    def replay(cls, config: EngineConfig, events: EventLog | Sequence[dict]) -> "Engine":
        """Rebuild derived state from an event history."""
        engine = cls(config, record_events=False)
        for event in events:
            kind = event["kind"]
            if kind == "enroll":
                engine.enroll(event["participant_id"], tz_offset_s=event["tz_offset_s"], now=event["now"])
            elif kind == "ingest":
                engine.ingest_batch(
                    event["participant_id"],
                    event["records"],
                    device_sent_at=event["device_sent_at"],
                    received_at=event["received_at"],
                )
            elif kind == "tick":
                engine.process_tick(event["now"])
            elif kind == "answer":
                engine.submit_answer(event["session_id"], event["node_id"], event["value"], event["now"])
            elif kind == "add_message":
                engine.add_message(
                    event["participant_id"], MessageCategory(event["category"]), event["text"], now=event["now"]
                )
            elif kind == "goal":
                engine.upsert_goal(
                    event["participant_id"], event["parent"], GoalLevel(event["level"]), event["title"]
                )
            elif kind == "activity_plan":
                engine.plan_activity(event["participant_id"], event["title"], event["anticipated"])
            elif kind == "activity_complete":
                engine.complete_activity(
                    event["participant_id"],
                    event["activity_id"],
                    event["experienced"],
                    event["savor"],
                    now=event["now"],
                )
            elif kind == "complete_step":
                engine.complete_step(event["participant_id"], event["goal_id"], now=event["now"])
            else:
                raise ValueError(f"unknown event kind {kind!r}")
        return engine

    # -- participants ------------------------------------------------------

    def enroll(self, participant_id: str, *, tz_offset_s: int = 0, now: Timestamp) -> ParticipantProfile:
        profile = ParticipantProfile(participant_id, tz_offset_s, enrolled_at=now)
        state = ParticipantState(profile)
        day0 = local_day_start(now, tz_offset_s)
        state.next_schedule_day = day0
        refit_at = day0 + 4 * 3600
        while refit_at <= now:
            refit_at += SECONDS_PER_DAY
        state.next_refit_at = refit_at
        state.next_wake_at = min(state.next_schedule_day, state.next_refit_at)
        self.store.participants[participant_id] = state
        self._ids_cache = self.store.ids()
        self._msg_rng[participant_id] = random.Random(f"{self.config.seed}|msg|{participant_id}")
        self._wheel_rng[participant_id] = random.Random(f"{self.config.seed}|wheel|{participant_id}")
        self._record("enroll", participant_id=participant_id, tz_offset_s=tz_offset_s, now=now)
        return profile

    def _state(self, participant_id: str) -> ParticipantState:
        state = self.store.participants.get(participant_id)
        if state is None:
            raise UnknownParticipant(participant_id)
        return state

    # -- ingestion -----------------------------------------------------------

    def ingest_batch(
        self,
        participant_id: str,
        records: Sequence[SensorRecord],
        *,
        device_sent_at: Timestamp,
        received_at: Timestamp,
    ) -> dict:
        """Persist one upload batch; duplicates drop idempotently."""
        state = self._state(participant_id)
        if received_at < device_sent_at:
            raise ValueError("received_at before device_sent_at")
        accepted = state.add_records(records, received_at)
        if self._record_events:
            self._record(
                "ingest",
                participant_id=participant_id,
                device_sent_at=device_sent_at,
                received_at=received_at,
                records=accepted,
            )
        return {"accepted": len(accepted), "duplicates": len(records) - len(accepted), "rejected": []}

    def ingest_trace(
        self,
        participant_id: str,
        trace_text: str,
        *,
        device_sent_at: Timestamp,
        received_at: Timestamp,
    ) -> dict:
        records, report = parse_trace(trace_text)
        foreign = [r for r in records if r.participant_id != participant_id]
        if foreign:
            raise UnknownParticipant(f"batch contains records for {foreign[0].participant_id!r}")
        ack = self.ingest_batch(
            participant_id, records, device_sent_at=device_sent_at, received_at=received_at
        )
        ack["rejected"] = [
            {"line_no": e.line_no, "reason": e.reason} for e in report.errors
        ]
        ack["ignored_other"] = report.other_lines
        return ack

    # -- processing ticks ------------------------------------------------------

    def process_tick(self, now: Timestamp) -> dict:
        """Refresh derived state and deliver due prompts.

        Uses only records with received_at <= now; deterministic given store
        contents, so replays converge. Participants whose next due work lies
        beyond `now` are skipped wholesale (next_wake_at is a conservative
        lower bound maintained here).
        """
        delta: dict = {"delivered": [], "expired": [], "refit": []}
        for participant_id in self._ids_cache:
            state = self.store.participants[participant_id]
            if now < state.next_wake_at:
                continue
            for sid in sorted(state.open_sessions):
                if expire_if_due(state.sessions[sid], now):
                    state.open_sessions.discard(sid)
                    delta["expired"].append(sid)
            self._extend_schedule(state, now)
            if state.next_refit_at <= now:
                self._refit_places(state, now)
                delta["refit"].append(participant_id)
                while state.next_refit_at <= now:
                    state.next_refit_at += self.config.place.refit_interval_days * SECONDS_PER_DAY
            still_pending: list[PendingPrompt] = []
            for prompt in state.pending_prompts:
                if prompt.due_at <= now:
                    session = self._deliver(state, prompt, now)
                    delta["delivered"].append(session.session_id)
                else:
                    still_pending.append(prompt)
            state.pending_prompts = still_pending
            wake = min(state.next_refit_at, state.next_schedule_day)
            for prompt in state.pending_prompts:
                wake = min(wake, prompt.due_at)
            for sid in state.open_sessions:
                wake = min(wake, state.sessions[sid].expires_at)
            state.next_wake_at = wake
        self.last_tick_at = now
        if self._record_events:
            self._record("tick", now=now)
        return delta

    def _extend_schedule(self, state: ParticipantState, now: Timestamp) -> None:
        day0 = local_day_start(state.profile.enrolled_at, state.profile.tz_offset_s)
        while state.next_schedule_day <= now:
            week = (state.next_schedule_day - day0) // SECONDS_PER_WEEK
            prompts = schedule_day(
                state.next_schedule_day,
                self.schedule,
                burst_week=week in self.config.ema.burst_weeks,
                active=state.profile.active,
            )
            state.pending_prompts.extend(prompts)
            state.next_schedule_day += SECONDS_PER_DAY

    def _refit_places(self, state: ParticipantState, now: Timestamp) -> None:
        cfg = self.config.place
        window_start = now - cfg.fit_window_days * SECONDS_PER_DAY
        records = state.records_between(window_start, now, received_before=now, kind=KIND_LOCATION)
        if len(records) > cfg.fit_sample_cap:
            stride = -(-len(records) // cfg.fit_sample_cap)  # ceil division
            records = records[::stride]
        model = build_place_model(
            records,
            eps_m=cfg.eps_m,
            min_pts=cfg.min_pts,
            geofence_radius_m=cfg.geofence_radius_m,
            max_accuracy_m=cfg.max_accuracy_m,
            tz_offset_s=state.profile.tz_offset_s,
            dwell_credit_s=cfg.dwell_credit_s,
        )
        if model.home is not None or state.place_model is None:
            state.place_model = model

    def build_window_context(
        self,
        state: ParticipantState,
        window: tuple[Timestamp, Timestamp],
        *,
        received_before: Optional[Timestamp],
    ):
        """Social context for a sensing window from in-window records only."""
        loc = state.records_between(window[0], window[1], received_before=received_before, kind=KIND_LOCATION)
        aud = state.records_between(window[0], window[1], received_before=received_before, kind=KIND_AUDIO)
        model = state.place_model
        if model is not None and model.home is not None and loc:
            timeline = home_away_timeline(
                loc, model, gap_timeout_s=int(self.config.place.gap_timeout_min * 60)
            )
        else:
            timeline = []
        a = self.config.audio
        episodes = detect_episodes(
            aud,
            voicing_min=a.voicing_min,
            energy_min_db=a.energy_min_db,
            density_min=a.density_min,
            window_merge_gap=a.window_merge_gap,
            period_s=a.period_s,
            active_s=a.active_s,
        )
        return classify_window(
            timeline,
            episodes,
            window[0],
            window[1],
            home_threshold=self.config.context.home_threshold,
            min_conv_s=self.config.context.min_conv_s,
        )

    def _deliver(self, state: ParticipantState, prompt: PendingPrompt, now: Timestamp) -> EmaSession:
        pid = state.profile.participant_id
        tz = state.profile.tz_offset_s
        day0 = local_day_start(state.profile.enrolled_at, tz)
        prompt_day = local_day_start(prompt.due_at, tz)
        day_index = (prompt_day - day0) // SECONDS_PER_DAY
        session_id = f"{pid}-d{day_index:03d}-{prompt.slot}"
        burst_items = self.script_bank.burst_items if prompt.burst else ()
        expires = now + int(self.config.ema.expire_after_h * 3600)

        if prompt.kind == EmaKind.ACTION_PLAN:
            script = self.script_bank.action_plan_script(burst_items)
            session = EmaSession(
                session_id, pid, script, prompt.kind, prompt.slot, now, expires
            )
        else:
            ctx = self.build_window_context(state, prompt.window, received_before=now)
            slot_word = slot_word_for_window((prompt.window[1] - prompt_day) % SECONDS_PER_DAY)
            rng = self._msg_rng[pid]
            if ctx.basis == ContextBasis.SENSED:
                message = self.message_bank.select_message(
                    pid, category_for_context(ctx.detected), rng, drawn_at=now
                )
                script = build_contextual_script(
                    ctx,
                    message,
                    self.script_bank,
                    slot_word=slot_word,
                    burst_items=burst_items,
                    script_id=f"contextual-{session_id}",
                )
                session = EmaSession(
                    session_id,
                    pid,
                    script,
                    prompt.kind,
                    prompt.slot,
                    now,
                    expires,
                    detected_context=ctx.detected,
                    basis=ctx.basis,
                    message_ids=(message.message.message_id,),
                )
            else:
                messages = {
                    MessageCategory.DEFEATIST_CHALLENGE: self.message_bank.select_message(
                        pid, MessageCategory.DEFEATIST_CHALLENGE, rng, drawn_at=now
                    ),
                    MessageCategory.THREAT_CHALLENGE: self.message_bank.select_message(
                        pid, MessageCategory.THREAT_CHALLENGE, rng, drawn_at=now
                    ),
                }
                script = build_direct_ask_script(
                    messages,
                    self.script_bank,
                    slot_word=slot_word,
                    burst_items=burst_items,
                    script_id=f"direct-{session_id}",
                )
                session = EmaSession(
                    session_id,
                    pid,
                    script,
                    prompt.kind,
                    prompt.slot,
                    now,
                    expires,
                    basis=ctx.basis,
                    message_ids=tuple(m.message.message_id for m in messages.values()),
                )
            state.context_windows.append(
                {
                    "session_id": session_id,
                    "slot": prompt.slot,
                    "start": ctx.start,
                    "end": ctx.end,
                    "detected": ctx.detected.label(),
                    "home_fraction": ctx.home_fraction,
                    "episode_count": ctx.episode_count,
                    "basis": ctx.basis.value,
                }
            )

        state.sessions[session_id] = session
        state.session_order.append(session_id)
        state.open_sessions.add(session_id)
        return session

    # -- answers -------------------------------------------------------------

    def submit_answer(self, session_id: str, node_id: str, value, now: Timestamp) -> EmaSession:
        session = self._find_session(session_id)
        state = self._state(session.participant_id)
        advance(session, node_id, value, now)
        if session.state in (SessionState.COMPLETED, SessionState.EXPIRED):
            state.open_sessions.discard(session_id)
        if node_id.startswith("burst_"):
            tz = state.profile.tz_offset_s
            day0 = local_day_start(state.profile.enrolled_at, tz)
            week = (local_day_start(session.delivered_at, tz) - day0) // SECONDS_PER_WEEK
            state.burst_answers.append((int(week), node_id[len("burst_") :], value))
        self._record("answer", session_id=session_id, node_id=node_id, value=value, now=now)
        return session

    def _find_session(self, session_id: str) -> EmaSession:
        for state in self.store.participants.values():
            if session_id in state.sessions:
                return state.sessions[session_id]
        raise UnknownParticipant(f"no session {session_id!r}")

    # -- therapist loop --------------------------------------------------------

    def add_message(
        self, participant_id: Optional[str], category: MessageCategory, text: str, *, now: Timestamp
    ) -> Message:
        if participant_id is not None:
            self._state(participant_id)  # must exist
        message = self.message_bank.add_message(participant_id, category, text, created_at=now)
        self._record(
            "add_message",
            participant_id=participant_id,
            category=MessageCategory(category).value,
            text=text,
            now=now,
        )
        return message

    # -- engagement --------------------------------------------------------------

    def upsert_goal(
        self, participant_id: str, parent: Optional[str], level: GoalLevel, title: str
    ) -> GoalNode:
        node = self._state(participant_id).engagement.upsert_goal_node(parent, level, title)
        self._record(
            "goal",
            participant_id=participant_id,
            parent=parent,
            level=GoalLevel(level).value,
            title=title,
        )
        return node

    def plan_activity(self, participant_id: str, title: str, anticipated: int):
        log = self._state(participant_id).engagement.plan_activity(title, anticipated)
        self._record(
            "activity_plan", participant_id=participant_id, title=title, anticipated=anticipated
        )
        return log

    def complete_activity(
        self,
        participant_id: str,
        activity_id: str,
        experienced: int,
        savor: Optional[str],
        *,
        now: Timestamp,
    ) -> AwardEntry:
        entry = self._state(participant_id).engagement.complete_activity(
            activity_id, experienced, savor, self._wheel_rng[participant_id], now
        )
        self._record(
            "activity_complete",
            participant_id=participant_id,
            activity_id=activity_id,
            experienced=experienced,
            savor=savor,
            now=now,
        )
        return entry

    def complete_step(self, participant_id: str, goal_id: str, *, now: Timestamp) -> AwardEntry:
        entry = self._state(participant_id).engagement.complete_step(
            goal_id, self._wheel_rng[participant_id], now
        )
        self._record("complete_step", participant_id=participant_id, goal_id=goal_id, now=now)
        return entry

    # -- reports -----------------------------------------------------------------

    def analysis_episodes_and_timeline(self, participant_id: str):
        """Analysis-grade recomputation over all records (no latency cutoff)."""
        state = self._state(participant_id)
        records = state.all_records()
        a = self.config.audio
        episodes = detect_episodes(
            (r for r in records if r.kind == KIND_AUDIO),
            voicing_min=a.voicing_min,
            energy_min_db=a.energy_min_db,
            density_min=a.density_min,
            window_merge_gap=a.window_merge_gap,
            period_s=a.period_s,
            active_s=a.active_s,
        )
        model = state.place_model
        if model is not None and model.home is not None:
            timeline = home_away_timeline(
                (r for r in records if r.kind == KIND_LOCATION),
                model,
                gap_timeout_s=int(self.config.place.gap_timeout_min * 60),
            )
        else:
            timeline = []
        return episodes, timeline

    def participant_report(
        self, participant_id: str, *, span_end: Optional[Timestamp] = None
    ) -> ParticipantReport:
        state = self._state(participant_id)
        sessions = list(sessions_in_order(state))
        resolutions = list(iter_resolutions(state))
        if span_end is None:
            span_end = self.last_tick_at or state.profile.enrolled_at + 1
            record_span = state.record_span()
            if record_span is not None:
                span_end = max(span_end, record_span[1])
        span = (state.profile.enrolled_at, span_end)
        episodes, timeline = self.analysis_episodes_and_timeline(participant_id)
        weeks_present = sorted({week for week, _, _ in state.burst_answers})
        bursts = [
            burst_summary(state.burst_answers, week) for week in weeks_present
        ]
        return ParticipantReport(
            participant_id=participant_id,
            adherence=adherence(sessions),
            accuracy=detection_accuracy(resolutions),
            coverage=coverage(
                state.all_records(),
                span,
                location_gap_max_s=600,
                audio_period_s=self.config.audio.period_s,
                tz_offset_s=state.profile.tz_offset_s,
            ),
            weekly=weekly_aggregate(episodes, timeline, span),
            message_mix=message_mix(
                e for e in self.message_bank.selection_log if e.participant_id == participant_id
            ),
            bursts=bursts,
            goals_total=len(state.engagement.goals),
            activities_total=len(state.engagement.activities),
            diamonds_total=state.engagement.ledger.total,
            context_windows=len(state.context_windows),
        )

    def sessions_as_dicts(self, participant_id: str) -> list[dict]:
        return [session_to_dict(s) for s in sessions_in_order(self._state(participant_id))]

    def context_windows(self, participant_id: str, start=None, end=None) -> list[dict]:
        out = []
        for w in self._state(participant_id).context_windows:
            if start is not None and w["end"] <= start:
                continue
            if end is not None and w["start"] >= end:
                continue
            out.append(w)
        return out
