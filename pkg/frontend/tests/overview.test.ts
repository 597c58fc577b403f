/** Snapshot tests over recorded API fixtures: the panels must carry the API
 * numbers verbatim (the dashboard computes no metrics of its own). */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  renderAccuracy,
  renderAdherence,
  renderContextWindows,
  renderCoverageCalendar,
  renderGoalTree,
  renderMessageMix,
  renderNotFound,
  renderOverview,
  renderWeeklyTrends,
} from "../src/overview.js";
import type { ContextWindow, Goal, ParticipantReport } from "../src/types.js";

const fixturesDir = join(__dirname, "fixtures");
const load = <T>(name: string): T =>
  JSON.parse(readFileSync(join(fixturesDir, name), "utf-8")) as T;

const report = load<ParticipantReport>("report.json");
const context = load<ContextWindow[]>("context.json");
const goals = load<Goal[]>("goals.json");
const emptyMixReport = load<ParticipantReport>("report-empty-mix.json");

describe("overview rendering from recorded fixtures", () => {
  it("renders the full overview to a stable snapshot", () => {
    expect(renderOverview(report, context, goals)).toMatchSnapshot();
  });

  it("shows the adherence gauge exactly as the API reports it", () => {
    const html = renderAdherence(report);
    expect(html).toContain(`data-value="${report.adherence.rate_percent}"`);
    expect(html).toContain(`${report.adherence.rate_percent}%`);
    expect(html).toContain(
      `${report.adherence.answered} answered of ${report.adherence.delivered} delivered`,
    );
    for (const [kind, k] of Object.entries(report.adherence.by_kind)) {
      expect(html).toContain(kind);
      expect(html).toContain(`${k.answered}/${k.delivered}`);
    }
  });

  it("shows the accuracy figure verbatim", () => {
    const html = renderAccuracy(report);
    expect(html).toContain(`${report.accuracy.accuracy_percent}%`);
    expect(html).toContain(`${report.accuracy.confirmed_yes} confirmed`);
    expect(html).toContain(`${report.accuracy.confirmed_no} corrected`);
  });

  it("renders one calendar cell per study day", () => {
    const html = renderCoverageCalendar(report);
    const cells = html.match(/class="day /g) ?? [];
    expect(cells.length).toBe(report.coverage.days.length);
  });

  it("labels every weekly bar with the API values", () => {
    const html = renderWeeklyTrends(report);
    for (const week of report.weekly) {
      expect(html).toContain(`${week.iso_week}: ${week.conversation_count} conversations`);
      expect(html).toContain(`<span class="value">${week.conversation_count}</span>`);
      expect(html).toContain(`<span class="value">${week.home_time_h}</span>`);
    }
  });

  it("passes through the message mix percents", () => {
    const html = renderMessageMix(report);
    for (const [category, percent] of Object.entries(report.message_mix_percent)) {
      expect(html).toContain(`<td>${category}</td><td>${percent}%</td>`);
    }
  });

  it("nests goals as long-term > short-term > step", () => {
    const html = renderGoalTree(goals);
    const step = goals.find((g) => g.level === "step")!;
    expect(html).toContain(step.title);
    // a step renders strictly deeper than its short-term parent
    const parent = goals.find((g) => g.goal_id === step.parent)!;
    expect(html.indexOf(parent.title)).toBeLessThan(html.indexOf(step.title));
  });

  it("lists recent context windows verbatim", () => {
    const html = renderContextWindows(context);
    const last = context[context.length - 1];
    expect(html).toContain(last.detected);
    expect(html).toContain(`<td>${last.episode_count}</td>`);
  });

  it("shows empty states without errors for a blank participant", () => {
    const blank: ParticipantReport = {
      ...emptyMixReport,
      adherence: {
        delivered: 0,
        answered: 0,
        rate: 0,
        rate_percent: 0,
        by_kind: {},
        answered_mix: {},
      },
      accuracy: {
        confirmed_yes: 0,
        confirmed_no: 0,
        excluded_no_answer: 0,
        accuracy: null,
        accuracy_percent: null,
      },
      coverage: { target_hours: 18, fraction_days_at_target: 0, days: [] },
      weekly: [],
      message_mix: {},
      message_mix_percent: {},
      bursts: [],
    };
    const html = renderOverview(blank, [], []);
    expect(html).toContain("n/a");
    expect(html).toContain("no goals yet");
    expect(html).toContain("no context windows yet");
    expect(html).toContain("no messages shown yet");
  });

  it("renders a not-found view for unknown participants", () => {
    const html = renderNotFound("ghost<script>");
    expect(html).toContain("Unknown participant");
    expect(html).not.toContain("<script>");
  });

  it("a 77% adherence report displays 77%", () => {
    const adapted = {
      ...report,
      adherence: { ...report.adherence, rate: 0.7692, rate_percent: 77 },
    };
    expect(renderAdherence(adapted)).toContain(">77%<");
  });
});
