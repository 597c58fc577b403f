"""HTTP API round-trips over the engine."""

import pytest
from fastapi.testclient import TestClient

from contextema.config import EngineConfig
from contextema.engine import Engine
from contextema.server import serve_api
from contextema.timebase import format_iso, parse_iso

from .test_engine import day_records

DAY0 = parse_iso("2026-03-02T00:00:00Z")


@pytest.fixture()
def client():
    app = serve_api(Engine(EngineConfig()))
    return TestClient(app)


def enroll(client, pid="p1", at=DAY0):
    response = client.post(
        "/v1/participants", json={"participant_id": pid, "enrolled_at": format_iso(at)}
    )
    assert response.status_code == 201
    return response.json()


def drive_to(client, t0, t1, step=600):
    t = t0
    while t <= t1:
        client.post("/v1/admin/tick", json={"now": format_iso(t)})
        t += step


def test_enroll_and_duplicate(client):
    enroll(client)
    again = client.post("/v1/participants", json={"participant_id": "p1"})
    assert again.status_code == 409


def test_message_post_then_get_round_trip(client):
    enroll(client)
    posted = client.post(
        "/v1/participants/p1/messages",
        json={"category": "defeatist_challenge", "text": "worth a try today"},
    )
    assert posted.status_code == 201
    listed = client.get("/v1/participants/p1/messages").json()
    personalized = [m for m in listed if m["participant_scope"] == "p1"]
    assert len(personalized) == 1
    assert personalized[0]["text"] == "worth a try today"
    assert posted.json()["message_id"] == personalized[0]["message_id"]


def test_empty_message_rejected(client):
    enroll(client)
    response = client.post(
        "/v1/participants/p1/messages", json={"category": "threat_challenge", "text": "  "}
    )
    assert response.status_code == 422


def test_unknown_participant_404(client):
    assert client.get("/v1/participants/ghost/sessions").status_code == 404
    assert client.get("/v1/participants/ghost/report").status_code == 404


def test_ingest_sessions_and_answers_flow(client):
    enroll(client)
    trace = "\n".join(
        f"p1,{format_iso(r.captured_at)},"
        + (
            f"LOC,{r.payload.lat},{r.payload.lon},{r.payload.accuracy_m}"
            if r.kind == "LOC"
            else f"AUD,{r.payload.window_id},{r.payload.offset_s},{r.payload.energy_db},{r.payload.voicing}"
        )
        for r in day_records(DAY0, conv_at=(36000,))
    )
    ack = client.post(
        "/v1/ingest",
        json={"participant_id": "p1", "device_sent_at": format_iso(DAY0), "trace": trace},
    ).json()
    assert ack["accepted"] > 0 and ack["rejected"] == []

    drive_to(client, DAY0, DAY0 + 13 * 3600)
    sessions = client.get("/v1/participants/p1/sessions").json()
    assert [s["slot"] for s in sessions] == ["morning", "noon"]
    noon = sessions[1]
    assert noon["detected_context"] == "home/with_others"

    answered = client.post(
        f"/v1/sessions/{noon['session_id']}/answers",
        json={
            "node_id": "confirm",
            "value": "yes",
            "answered_at": format_iso(DAY0 + 12 * 3600 + 120),
        },
    )
    assert answered.status_code == 200
    assert answered.json()["confirmed"] == "yes"

    drive_to(client, DAY0 + 13 * 3600, DAY0 + 19 * 3600)
    sessions = client.get("/v1/participants/p1/sessions").json()
    assert [s["slot"] for s in sessions] == ["morning", "noon", "evening"]

    windows = client.get(
        "/v1/participants/p1/context",
        params={"from": format_iso(DAY0), "to": format_iso(DAY0 + 86400)},
    ).json()
    assert len(windows) >= 1
    assert windows[0]["detected"] == "home/with_others"


def test_answer_to_expired_session_conflicts(client):
    enroll(client)
    trace = f"p1,{format_iso(DAY0)},LOC,43.7,-72.3,10"
    client.post(
        "/v1/ingest",
        json={"participant_id": "p1", "device_sent_at": format_iso(DAY0), "trace": trace},
    )
    drive_to(client, DAY0, DAY0 + 9 * 3600, step=3600)
    sessions = client.get("/v1/participants/p1/sessions").json()
    morning = sessions[0]["session_id"]
    late = client.post(
        f"/v1/sessions/{morning}/answers",
        json={
            "node_id": "plan_choice",
            "value": "goal_step",
            "answered_at": format_iso(DAY0 + 20 * 3600),
        },
    )
    assert late.status_code == 409
    assert late.json()["detail"]["error"] == "SessionExpired"


def test_wrong_answer_value_is_422(client):
    enroll(client)
    trace = f"p1,{format_iso(DAY0)},LOC,43.7,-72.3,10"
    client.post(
        "/v1/ingest",
        json={"participant_id": "p1", "device_sent_at": format_iso(DAY0), "trace": trace},
    )
    drive_to(client, DAY0, DAY0 + 8 * 3600, step=3600)
    sessions = client.get("/v1/participants/p1/sessions").json()
    response = client.post(
        f"/v1/sessions/{sessions[0]['session_id']}/answers",
        json={
            "node_id": "plan_choice",
            "value": "sleep_all_day",
            "answered_at": format_iso(DAY0 + 8 * 3600 + 60),
        },
    )
    assert response.status_code == 422


def test_report_endpoint_carries_adherence(client):
    enroll(client)
    report = client.get("/v1/participants/p1/report").json()
    assert report["adherence"]["delivered"] == 0
    assert report["adherence"]["rate"] == 0.0
    assert report["accuracy"]["accuracy"] is None


def test_goals_activities_awards_views(client):
    enroll(client)
    app_engine = client.app.state.engine
    lt = app_engine.upsert_goal("p1", None, "long_term", "make a friend")
    st = app_engine.upsert_goal("p1", lt.goal_id, "short_term", "meet people")
    step = app_engine.upsert_goal("p1", st.goal_id, "step", "say hello")
    app_engine.plan_activity("p1", "go shopping", 4)
    app_engine.complete_step("p1", step.goal_id, now=DAY0)

    goals = client.get("/v1/participants/p1/goals").json()
    assert {g["level"] for g in goals} == {"long_term", "short_term", "step"}
    activities = client.get("/v1/participants/p1/activities").json()
    assert activities[0]["status"] == "planned"
    awards = client.get("/v1/participants/p1/awards").json()
    assert awards["total"] >= 1
    assert awards["entries"][0]["source"] == "goal_step"


def test_api_token_enforced_when_configured():
    engine = Engine(EngineConfig.from_dict({"api_token": "secret"}))
    client = TestClient(serve_api(engine))
    assert client.get("/v1/participants/p1/sessions").status_code == 401
    ok = client.post(
        "/v1/participants",
        json={"participant_id": "p1"},
        headers={"x-api-token": "secret"},
    )
    assert ok.status_code == 201
