/** Participant overview panels rendered as HTML strings.
 *
 * Every number shown comes verbatim from an API response field; this module
 * does layout only and never recomputes a metric. Pure string rendering keeps
 * the views snapshot-testable without a DOM.
 */

import type {
  ContextWindow,
  Goal,
  ParticipantReport,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function show(value: number | string | null): string {
  return value === null ? "n/a" : String(value);
}

export function renderAdherence(report: ParticipantReport): string {
  const a = report.adherence;
  const rows = Object.entries(a.by_kind)
    .map(([kind, k]) => {
      const width = Math.max(0, Math.min(100, k.rate * 100));
      return `<tr>
        <td class="kind">${escapeHtml(kind)}</td>
        <td class="counts">${k.answered}/${k.delivered}</td>
        <td class="bar"><div class="bar-fill" style="width:${width}%"></div></td>
      </tr>`;
    })
    .join("\n");
  return `<section class="panel" id="adherence">
  <h2>EMA adherence</h2>
  <div class="gauge" data-value="${a.rate_percent}">${a.rate_percent}%</div>
  <div class="gauge-sub">${a.answered} answered of ${a.delivered} delivered</div>
  <table class="kinds">${rows}</table>
</section>`;
}

export function renderAccuracy(report: ParticipantReport): string {
  const acc = report.accuracy;
  const figure = acc.accuracy_percent === null ? "n/a" : `${acc.accuracy_percent}%`;
  return `<section class="panel" id="accuracy">
  <h2>Context detection accuracy</h2>
  <div class="gauge" data-value="${show(acc.accuracy_percent)}">${figure}</div>
  <div class="gauge-sub">${acc.confirmed_yes} confirmed / ${acc.confirmed_no} corrected / ${acc.excluded_no_answer} unanswered</div>
</section>`;
}

export function renderCoverageCalendar(report: ParticipantReport): string {
  const cov = report.coverage;
  const cells = cov.days
    .map((day) => {
      const ok = day.location_h >= cov.target_hours && day.audio_h >= cov.target_hours;
      const date = new Date(day.day_start * 1000).toISOString().slice(0, 10);
      return `<div class="day ${ok ? "ok" : "low"}" title="${date}: location ${day.location_h} h, audio ${day.audio_h} h"></div>`;
    })
    .join("");
  const percent = Math.round(cov.fraction_days_at_target * 100);
  return `<section class="panel" id="coverage">
  <h2>Sensing coverage</h2>
  <div class="gauge-sub">days with &ge; ${cov.target_hours} h of location and audio: ${percent}%</div>
  <div class="calendar">${cells}</div>
</section>`;
}

function barChart(values: number[], labels: string[], unit: string): string {
  const peak = Math.max(1, ...values);
  const bars = values
    .map((value, i) => {
      const height = (value / peak) * 100;
      return `<div class="col" title="${labels[i]}: ${value} ${unit}">
        <div class="fill" style="height:${height}%"></div>
        <span class="value">${value}</span>
      </div>`;
    })
    .join("");
  return `<div class="chart">${bars}</div>`;
}

export function renderWeeklyTrends(report: ParticipantReport): string {
  const weeks = report.weekly;
  const labels = weeks.map((w) => w.iso_week);
  return `<section class="panel" id="weekly">
  <h2>Weekly conversations</h2>
  ${barChart(weeks.map((w) => w.conversation_count), labels, "conversations")}
  <h2>Weekly time at home (hours)</h2>
  ${barChart(weeks.map((w) => w.home_time_h), labels, "h")}
</section>`;
}

export function renderGoalTree(goals: Goal[]): string {
  const children = new Map<string | null, Goal[]>();
  for (const goal of goals) {
    const list = children.get(goal.parent) ?? [];
    list.push(goal);
    children.set(goal.parent, list);
  }
  const renderNode = (goal: Goal): string => {
    const kids = (children.get(goal.goal_id) ?? []).map(renderNode).join("");
    return `<li class="${goal.status}">
      <span class="title">${escapeHtml(goal.title)}</span>
      <span class="status">${goal.status === "completed" ? "&#10003;" : ""}</span>
      ${kids ? `<ul>${kids}</ul>` : ""}
    </li>`;
  };
  const roots = (children.get(null) ?? []).map(renderNode).join("");
  return `<section class="panel" id="goals">
  <h2>Goals</h2>
  ${roots ? `<ul class="goal-tree">${roots}</ul>` : `<p class="empty">no goals yet</p>`}
</section>`;
}

export function renderContextWindows(windows: ContextWindow[], limit = 8): string {
  const recent = windows.slice(-limit).reverse();
  const rows = recent
    .map(
      (w) => `<tr>
      <td>${w.start.slice(0, 16).replace("T", " ")}</td>
      <td>${escapeHtml(w.slot)}</td>
      <td>${escapeHtml(w.detected)}</td>
      <td>${w.episode_count}</td>
      <td>${escapeHtml(w.basis)}</td>
    </tr>`,
    )
    .join("\n");
  return `<section class="panel" id="context">
  <h2>Recent context windows</h2>
  ${
    rows
      ? `<table class="windows"><tr><th>window</th><th>slot</th><th>detected</th><th>episodes</th><th>basis</th></tr>${rows}</table>`
      : `<p class="empty">no context windows yet</p>`
  }
</section>`;
}

export function renderMessageMix(report: ParticipantReport): string {
  const entries = Object.entries(report.message_mix_percent);
  if (!entries.length) {
    return `<section class="panel" id="mix"><h2>Challenge-message mix</h2><p class="empty">no messages shown yet</p></section>`;
  }
  const rows = entries
    .map(([category, percent]) => `<tr><td>${escapeHtml(category)}</td><td>${percent}%</td></tr>`)
    .join("");
  return `<section class="panel" id="mix">
  <h2>Challenge-message mix</h2>
  <table>${rows}</table>
</section>`;
}

export function renderOverview(
  report: ParticipantReport,
  context: ContextWindow[],
  goals: Goal[],
): string {
  return [
    `<header><h1>${escapeHtml(report.participant_id)}</h1>
    <div class="totals">goals ${report.goals_total} &middot; activities ${report.activities_total} &middot; diamonds ${report.diamonds_total}</div>
    </header>`,
    renderAdherence(report),
    renderAccuracy(report),
    renderCoverageCalendar(report),
    renderWeeklyTrends(report),
    renderMessageMix(report),
    renderGoalTree(goals),
    renderContextWindows(context),
  ].join("\n");
}

export function renderNotFound(participantId: string): string {
  return `<section class="panel error"><h2>Unknown participant</h2>
  <p>No participant called <strong>${escapeHtml(participantId)}</strong> is enrolled.</p></section>`;
}
