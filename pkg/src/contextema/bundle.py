"""Report bundle rendering: CSV tables, plaintext summary, trace export.

Output bytes are a pure function of engine state so identical runs produce
identical bundles.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .engine import Engine
from .metrics import ParticipantReport, message_mix_percent, report_to_dict
from .records import serialize_trace
from .store import sessions_in_order
from .timebase import format_iso


def adherence_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,kind,delivered,answered,rate"]
    for pid, report in sorted(reports.items()):
        a = report.adherence
        lines.append(f"{pid},all,{a.delivered},{a.answered},{a.rate:.4f}")
        for kind, (d, ans, rate) in a.by_kind.items():
            lines.append(f"{pid},{kind},{d},{ans},{rate:.4f}")
    return "\n".join(lines) + "\n"


def accuracy_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,confirmed_yes,confirmed_no,excluded_no_answer,accuracy"]
    for pid, report in sorted(reports.items()):
        acc = report.accuracy
        shown = "" if acc.accuracy is None else f"{acc.accuracy:.4f}"
        lines.append(f"{pid},{acc.confirmed_yes},{acc.confirmed_no},{acc.excluded_no_answer},{shown}")
    return "\n".join(lines) + "\n"


def coverage_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,day,location_h,audio_h,meets_target"]
    for pid, report in sorted(reports.items()):
        for day in report.coverage.days:
            lines.append(
                f"{pid},{format_iso(day.day_start)[:10]},{day.location_h:.3f},"
                f"{day.audio_h:.3f},{int(day.meets(report.coverage.target_hours))}"
            )
    return "\n".join(lines) + "\n"


def weekly_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,week_index,iso_week,conversation_count,home_time_h"]
    for pid, report in sorted(reports.items()):
        for week in report.weekly:
            lines.append(
                f"{pid},{week.week_index},{week.iso_week},{week.conversation_count},{week.home_time_h:.3f}"
            )
    return "\n".join(lines) + "\n"


def message_mix_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,category,fraction,percent"]
    for pid, report in sorted(reports.items()):
        percents = message_mix_percent(report.message_mix)
        for category, fraction in report.message_mix.items():
            lines.append(f"{pid},{category},{fraction:.4f},{percents[category]}")
    return "\n".join(lines) + "\n"


def bursts_csv(reports: dict[str, ParticipantReport]) -> str:
    lines = ["participant_id,week,item,mean,count"]
    for pid, report in sorted(reports.items()):
        for burst in report.bursts:
            for item, mean in burst.item_means.items():
                lines.append(
                    f"{pid},{burst.time_point},{item},{mean:.3f},{burst.item_counts[item]}"
                )
    return "\n".join(lines) + "\n"


def sessions_csv(engine: Engine) -> str:
    lines = ["session_id,participant,kind,delivered_at,state,context_detected,context_effective"]
    for pid in engine.store.ids():
        for session in sessions_in_order(engine.store.participants[pid]):
            from .ema import effective_context

            detected = session.detected_context.label() if session.detected_context else ""
            effective = effective_context(session)
            lines.append(
                f"{session.session_id},{pid},{session.kind.value},"
                f"{format_iso(session.delivered_at)},{session.state.value},"
                f"{detected},{effective.label() if effective else ''}"
            )
    return "\n".join(lines) + "\n"


def resolutions_csv(engine: Engine) -> str:
    """Context resolution log: one row per contextual window with how the
    participant's confirmation resolved the detection."""
    lines = ["participant_id,window_from,window_to,detected,confirmed,effective"]
    for pid in engine.store.ids():
        state = engine.store.participants[pid]
        for window in state.context_windows:
            session = state.sessions[window["session_id"]]
            res = session.resolution
            from .ema import effective_context

            effective = effective_context(session)
            lines.append(
                f"{pid},{format_iso(window['start'])},{format_iso(window['end'])},"
                f"{window['detected']},{res.confirmed.value if res else ''},"
                f"{effective.label() if effective else ''}"
            )
    return "\n".join(lines) + "\n"


def goals_csv(engine: Engine) -> str:
    lines = ["participant_id,goal_id,parent,level,title,status"]
    for pid in engine.store.ids():
        book = engine.store.participants[pid].engagement
        for row in book.goals_to_csv().splitlines()[1:]:
            lines.append(f"{pid},{row}")
    return "\n".join(lines) + "\n"


def activities_csv(engine: Engine) -> str:
    lines = ["participant_id,activity_id,anticipated,experienced,status"]
    for pid in engine.store.ids():
        book = engine.store.participants[pid].engagement
        for row in book.activities_to_csv().splitlines()[1:]:
            lines.append(f"{pid},{row}")
    return "\n".join(lines) + "\n"


def plaintext_summary(reports: dict[str, ParticipantReport]) -> str:
    out = []
    for pid, report in sorted(reports.items()):
        a, acc, cov = report.adherence, report.accuracy, report.coverage
        out.append(f"== participant {pid}")
        out.append(
            f"  EMA adherence: {a.answered}/{a.delivered} answered ({a.rate_percent}%)"
        )
        for kind, (d, ans, rate) in a.by_kind.items():
            out.append(f"    {kind}: {ans}/{d} ({round(rate * 100)}%)")
        mix = report.adherence.answered_mix()
        if mix:
            shares = ", ".join(f"{k} {round(v * 100)}%" for k, v in sorted(mix.items()))
            out.append(f"    answered mix: {shares}")
        if acc.accuracy is None:
            out.append(f"  context accuracy: n/a ({acc.excluded_no_answer} unconfirmed)")
        else:
            out.append(
                f"  context accuracy: {acc.accuracy_percent}% "
                f"({acc.confirmed_yes} yes / {acc.confirmed_no} no, {acc.excluded_no_answer} excluded)"
            )
        out.append(
            f"  sensing coverage: {round(cov.fraction_days_at_target * 100)}% of days at "
            f">= {cov.target_hours:.0f} h (both streams)"
        )
        if report.weekly:
            convs = ", ".join(str(w.conversation_count) for w in report.weekly)
            homes = ", ".join(f"{w.home_time_h:.0f}" for w in report.weekly)
            out.append(f"  weekly conversations: {convs}")
            out.append(f"  weekly home hours:    {homes}")
        if report.message_mix:
            percents = message_mix_percent(report.message_mix)
            out.append(
                "  challenge-message mix: "
                + ", ".join(f"{k} {v}%" for k, v in sorted(percents.items()))
            )
        for burst in report.bursts:
            means = ", ".join(f"{k}={v:.2f}" for k, v in burst.item_means.items())
            out.append(f"  burst week {burst.time_point}: {means}")
        out.append(
            f"  goals: {report.goals_total}, activities: {report.activities_total},"
            f" diamonds: {report.diamonds_total}"
        )
        out.append("")
    return "\n".join(out)


def scoring_csv(scoring) -> str:
    lines = ["participant_id,day_index,slot,basis,detected,truth,gt_match,confirmed"]
    for row in scoring:
        lines.append(
            f"{row.participant_id},{row.day_index},{row.slot},{row.basis},"
            f"{row.detected or ''},{row.truth},"
            f"{'' if row.gt_match is None else int(row.gt_match)},{row.confirmed or ''}"
        )
    return "\n".join(lines) + "\n"


def write_bundle(
    engine: Engine,
    out_dir: Path,
    *,
    scoring=None,
    traces: bool = False,
    summary: Optional[dict] = None,
    span_end: Optional[int] = None,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = {
        pid: engine.participant_report(pid, span_end=span_end) for pid in engine.store.ids()
    }

    (out_dir / "adherence.csv").write_text(adherence_csv(reports), encoding="utf-8")
    (out_dir / "accuracy.csv").write_text(accuracy_csv(reports), encoding="utf-8")
    (out_dir / "coverage.csv").write_text(coverage_csv(reports), encoding="utf-8")
    (out_dir / "weekly.csv").write_text(weekly_csv(reports), encoding="utf-8")
    (out_dir / "message_mix.csv").write_text(message_mix_csv(reports), encoding="utf-8")
    (out_dir / "bursts.csv").write_text(bursts_csv(reports), encoding="utf-8")
    (out_dir / "sessions.csv").write_text(sessions_csv(engine), encoding="utf-8")
    (out_dir / "resolutions.csv").write_text(resolutions_csv(engine), encoding="utf-8")
    (out_dir / "goals.csv").write_text(goals_csv(engine), encoding="utf-8")
    (out_dir / "activities.csv").write_text(activities_csv(engine), encoding="utf-8")
    (out_dir / "report.txt").write_text(plaintext_summary(reports), encoding="utf-8")

    bundle = {pid: report_to_dict(r) for pid, r in sorted(reports.items())}
    if summary:
        bundle["_study"] = summary
    (out_dir / "report.json").write_text(
        json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if scoring is not None:
        (out_dir / "scoring.csv").write_text(scoring_csv(scoring), encoding="utf-8")
    if traces:
        trace_dir = out_dir / "traces"
        trace_dir.mkdir(exist_ok=True)
        for pid in engine.store.ids():
            records = engine.store.participants[pid].all_records()
            (trace_dir / f"{pid}.trace").write_text(serialize_trace(records), encoding="utf-8")
