"""Scheduling, contextual script construction, session advancement, and the
script-walk property."""

import random

import pytest

from contextema.context import (
    CompanyState,
    ConfirmAnswer,
    ContextBasis,
    LocationState,
    SocialContext,
    SocialContextWindow,
)
from contextema.ema import (
    AnswerSpec,
    DailySchedule,
    EmaKind,
    EmaScript,
    EmaSession,
    ScriptBank,
    ScriptNode,
    SessionState,
    advance,
    build_contextual_script,
    build_direct_ask_script,
    confirm_prompt,
    fallback_prompt,
    schedule_day,
    session_to_dict,
    slot_word_for_window,
)
from contextema.errors import (
    CategoryMismatch,
    InactiveParticipant,
    InvalidScript,
    SessionExpired,
    ValueOutOfDomain,
    WrongNode,
)
from contextema.messages import (
    MessageAuthor,
    Message,
    MessageCategory,
    MessagePool,
    SelectedMessage,
)
from contextema.timebase import parse_hhmm, parse_iso

BANK = ScriptBank()


def selected(category, text="challenge text"):
    return SelectedMessage(
        Message("m1", None, category, text, MessageAuthor.SEED, 0), MessagePool.GENERIC, 0
    )


def ctx_window(loc, comp, basis=ContextBasis.SENSED):
    return SocialContextWindow(
        start=0,
        end=21600,
        detected=SocialContext(LocationState(loc), CompanyState(comp)),
        home_fraction=1.0 if loc == "home" else 0.0,
        episode_count=1 if comp == "with_others" else 0,
        basis=basis,
    )


def test_schedule_day_has_three_prompts_in_order():
    day = parse_iso("2026-03-02T00:00:00Z")
    prompts = schedule_day(day, DailySchedule(), burst_week=False)
    assert [p.slot for p in prompts] == ["morning", "noon", "evening"]
    assert [p.kind for p in prompts] == [
        EmaKind.ACTION_PLAN,
        EmaKind.CONTEXTUAL,
        EmaKind.CONTEXTUAL,
    ]
    assert prompts[0].due_at == day + parse_hhmm("08:00")
    assert prompts[1].window == (day + parse_hhmm("06:00"), day + parse_hhmm("12:00"))
    assert prompts[2].window == (day + parse_hhmm("12:00"), day + parse_hhmm("18:00"))


def test_inactive_participant_gets_no_prompts():
    with pytest.raises(InactiveParticipant):
        schedule_day(0, DailySchedule(), burst_week=False, active=False)


def test_burst_week_appends_items_to_every_prompt():
    script = BANK.action_plan_script(BANK.burst_items)
    burst_ids = [n.node_id for n in script.nodes if n.node_id.startswith("burst_")]
    assert len(burst_ids) == len(BANK.burst_items)
    # non-custom plan routes into the burst chain instead of ending
    assert script.node("plan_choice").next_for("interact_with_someone") == burst_ids[0]


def test_confirm_prompt_wording_home_with_others_afternoon():
    text = confirm_prompt(
        SocialContext(LocationState.HOME, CompanyState.WITH_OTHERS), "afternoon"
    )
    assert text == "I think you have been home and around other people in the afternoon; am I right?"


def test_confirm_prompt_interpolates_slot_and_context():
    text = confirm_prompt(SocialContext(LocationState.AWAY, CompanyState.ALONE), "morning")
    assert text == "I think you have been away and alone in the morning; am I right?"


def test_fallback_wording():
    assert fallback_prompt("morning") == "Sorry that we got it wrong! Were you around others this morning?"
    assert fallback_prompt("afternoon") == "Sorry that we got it wrong! Were you around others this afternoon?"


def test_slot_words():
    assert slot_word_for_window(parse_hhmm("12:00")) == "morning"
    assert slot_word_for_window(parse_hhmm("18:00")) == "afternoon"
    assert slot_word_for_window(parse_hhmm("22:00")) == "evening"


def test_contextual_script_confirm_is_entry_and_no_routes_to_fallback():
    script = build_contextual_script(
        ctx_window("home", "with_others"),
        selected(MessageCategory.DEFEATIST_CHALLENGE),
        BANK,
        slot_word="afternoon",
    )
    assert script.entry == "confirm"
    confirm = script.node("confirm")
    assert confirm.next_for("no") == "fallback"
    # fallback reachable only via the confirm-no edge
    inbound = [
        n.node_id
        for n in script.nodes
        for value, target in n.branch
        if target == "fallback"
    ]
    assert inbound == ["confirm"]


def test_contextual_script_category_must_match_context():
    with pytest.raises(CategoryMismatch):
        build_contextual_script(
            ctx_window("home", "alone"),
            selected(MessageCategory.DEFEATIST_CHALLENGE),  # home-alone wants threat
            BANK,
            slot_word="morning",
        )


def test_home_alone_script_appraises_threat_beliefs():
    script = build_contextual_script(
        ctx_window("home", "alone"),
        selected(MessageCategory.THREAT_CHALLENGE),
        BANK,
        slot_word="morning",
    )
    yes_target = script.node("confirm").next_for("yes")
    assert yes_target.startswith("a_threat")
    # corrected to with-others -> defeatist appraisals
    assert script.node("fallback").next_for("yes").startswith("w_defeatist")


def test_away_alone_script_challenges_defeatist_beliefs():
    script = build_contextual_script(
        ctx_window("away", "alone"),
        selected(MessageCategory.DEFEATIST_CHALLENGE, "defeatist message"),
        BANK,
        slot_word="afternoon",
    )
    node = script.node("confirm").next_for("yes")
    while not node.endswith("challenge"):
        node = script.node(node).next_for(4)
    assert script.node(node).prompt == "defeatist message"


def test_savor_shown_only_when_with_others():
    with_others = build_contextual_script(
        ctx_window("away", "with_others"),
        selected(MessageCategory.DEFEATIST_CHALLENGE),
        BANK,
        slot_word="afternoon",
    )
    assert with_others.node("w_challenge").next == "w_savor"
    assert with_others.node("a_challenge").next is None

    alone = build_contextual_script(
        ctx_window("home", "alone"),
        selected(MessageCategory.THREAT_CHALLENGE),
        BANK,
        slot_word="morning",
    )
    assert alone.node("a_challenge").next is None
    assert alone.node("w_challenge").next == "w_savor"


def test_direct_ask_script_asks_location_then_company():
    msgs = {
        MessageCategory.DEFEATIST_CHALLENGE: selected(MessageCategory.DEFEATIST_CHALLENGE, "d"),
        MessageCategory.THREAT_CHALLENGE: selected(MessageCategory.THREAT_CHALLENGE, "t"),
    }
    script = build_direct_ask_script(msgs, BANK, slot_word="morning")
    assert script.entry == "ask_location"
    assert script.node("ask_location").next_for("home") == "ask_company_home"
    assert script.node("ask_company_home").next_for("no").startswith("ha_threat")
    assert script.node("ask_company_away").next_for("no").startswith("aa_defeatist")
    with pytest.raises(CategoryMismatch):
        build_direct_ask_script(
            {MessageCategory.DEFEATIST_CHALLENGE: msgs[MessageCategory.DEFEATIST_CHALLENGE]},
            BANK,
            slot_word="morning",
        )


def make_session(script, delivered=1000, expire=4 * 3600, **kw):
    return EmaSession("s1", "p1", script, script.kind, "noon", delivered, delivered + expire, **kw)


def contextual_session(loc="home", comp="with_others"):
    cat = (
        MessageCategory.THREAT_CHALLENGE
        if (loc, comp) == ("home", "alone")
        else MessageCategory.DEFEATIST_CHALLENGE
    )
    script = build_contextual_script(
        ctx_window(loc, comp), selected(cat), BANK, slot_word="morning"
    )
    return make_session(
        script,
        detected_context=SocialContext(LocationState(loc), CompanyState(comp)),
        basis=ContextBasis.SENSED,
    )


def test_advance_walks_to_completion_and_reconciles_yes():
    s = contextual_session()
    t = 1100
    node = s.script.entry
    answers = {"choice": lambda n: n.answer.options[0], "slider": lambda n: 4, "text": lambda n: "note"}
    while s.state != SessionState.COMPLETED:
        spec = s.script.node(node)
        advance(s, node, answers[spec.answer.kind](spec), t)
        t += 30
        node = s.current_node_id
    assert s.resolution is not None
    assert s.resolution.confirmed == ConfirmAnswer.YES
    assert s.resolution.effective == s.detected_context


def test_confirm_no_path_corrects_company():
    s = contextual_session("home", "with_others")
    advance(s, "confirm", "no", 1100)
    assert s.current_node_id == "fallback"
    advance(s, "fallback", "no", 1200)  # "were you around others?" -> no
    assert s.resolution.confirmed == ConfirmAnswer.NO
    assert s.resolution.effective == SocialContext(LocationState.HOME, CompanyState.ALONE)
    # proceeds down the alone (threat, since home) appraisal chain
    assert s.current_node_id.startswith("a_threat")


def test_skip_keeps_detection_but_marks_no_answer():
    s = contextual_session("away", "alone")
    advance(s, "confirm", "skip", 1100)
    assert s.resolution.confirmed == ConfirmAnswer.NO_ANSWER
    assert not s.resolution.counts_for_accuracy


def test_wrong_node_and_domain_violations():
    s = contextual_session()
    with pytest.raises(WrongNode):
        advance(s, "fallback", "yes", 1100)
    with pytest.raises(ValueOutOfDomain):
        advance(s, "confirm", "maybe", 1100)
    advance(s, "confirm", "yes", 1100)
    slider_node = s.current_node_id
    with pytest.raises(ValueOutOfDomain):
        advance(s, slider_node, 9, 1200)
    with pytest.raises(ValueOutOfDomain):
        advance(s, slider_node, "4", 1200)


def test_expired_sessions_accept_no_answers():
    s = contextual_session()
    with pytest.raises(SessionExpired):
        advance(s, "confirm", "yes", s.expires_at)
    assert s.state == SessionState.EXPIRED
    with pytest.raises(SessionExpired):
        advance(s, "confirm", "yes", s.expires_at + 1)
    # expiry before any answer records a NoAnswer resolution
    assert s.resolution.confirmed == ConfirmAnswer.NO_ANSWER


def test_terminal_answer_completes_session():
    script = BANK.action_plan_script()
    s = make_session(script)
    advance(s, "plan_choice", "interact_with_someone", 1100)
    assert s.state == SessionState.COMPLETED
    s2 = make_session(script)
    advance(s2, "plan_choice", "custom_goal", 1100)
    assert s2.state == SessionState.IN_PROGRESS
    advance(s2, "custom_text", "call my cousin", 1200)
    assert s2.state == SessionState.COMPLETED


def test_script_validation_catches_bad_graphs():
    dangling = EmaScript(
        "bad",
        EmaKind.ACTION_PLAN,
        "a",
        (ScriptNode("a", "q", AnswerSpec("choice", ("x",)), (("x", "missing"),), None),),
    )
    with pytest.raises(InvalidScript):
        dangling.validate()
    cyclic = EmaScript(
        "loop",
        EmaKind.ACTION_PLAN,
        "a",
        (
            ScriptNode("a", "q", AnswerSpec("text"), (), "b"),
            ScriptNode("b", "q", AnswerSpec("text"), (), "a"),
        ),
    )
    with pytest.raises(InvalidScript):
        cyclic.validate()


def random_script(rng):
    """Random DAG over n nodes with forward-only edges."""
    n = rng.randrange(2, 12)
    nodes = []
    for i in range(n):
        if rng.random() < 0.5 and i + 1 < n:
            options = tuple(f"o{j}" for j in range(rng.randrange(2, 4)))
            branch = tuple(
                (o, f"n{rng.randrange(i + 1, n)}") for o in options if rng.random() < 0.8
            )
            nxt = f"n{rng.randrange(i + 1, n)}" if rng.random() < 0.7 else None
            nodes.append(ScriptNode(f"n{i}", f"q{i}", AnswerSpec("choice", options), branch, nxt))
        else:
            nxt = f"n{rng.randrange(i + 1, n)}" if i + 1 < n and rng.random() < 0.8 else None
            nodes.append(ScriptNode(f"n{i}", f"q{i}", AnswerSpec("slider", lo=1, hi=7), (), nxt))
    return EmaScript("rand", EmaKind.CONTEXTUAL, "n0", tuple(nodes)).validate()


def test_random_walks_always_terminate_without_revisits():
    rng = random.Random(1234)
    for _ in range(1000):
        script = random_script(rng)
        s = EmaSession("s", "p", script, script.kind, "noon", 0, 4 * 3600)
        visited = []
        t = 10
        while s.state not in (SessionState.COMPLETED,):
            node_id = s.current_node_id
            assert node_id not in visited, "revisited a node"
            visited.append(node_id)
            node = script.node(node_id)
            value = rng.choice(node.answer.options) if node.answer.kind == "choice" else rng.randrange(1, 8)
            advance(s, node_id, value, t)
            t += 1
        assert s.answers[-1].node_id == visited[-1]


def test_session_dict_round_trip_is_stable():
    s = contextual_session()
    advance(s, "confirm", "yes", 1100)
    d1 = session_to_dict(s)
    d2 = session_to_dict(s)
    assert d1 == d2
    assert d1["confirmed"] == "yes"
    assert d1["state"] == "in_progress"
