/** End-to-end round trip against the real sync service: a message submitted
 * through the dashboard form becomes selectable in the next simulated
 * contextual prompts for that participant.
 *
 * Spawns the Python service with a virtual clock; requires the backend
 * package to be installed (pip install -e ..).
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { StudyHarness } from "./harness.js";
import { initialFormState, submitMessage, withText } from "../src/message-form.js";
import type { Session } from "../src/types.js";

const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;
const DAY0 = Date.parse("2026-03-02T00:00:00Z") / 1000;
const PID = "p-rt";

let server: ChildProcess;

function iso(t: number): string {
  return new Date(t * 1000).toISOString().replace(/\.\d{3}Z$/, "Z");
}

function dayTrace(dayStart: number): string {
  const lines: string[] = [];
  for (let m = 0; m < 1440; m += 5) {
    lines.push(`${PID},${iso(dayStart + m * 60)},LOC,43.7022,-72.2896,10.0`);
  }
  const convWindows = new Set<number>();
  for (const startHour of [10, 14]) {
    for (let w = 0; w < 3; w += 1) convWindows.add(startHour * 6 + w);
  }
  for (let k = 0; k < 144; k += 1) {
    const w0 = dayStart + k * 600;
    if (convWindows.has(k)) {
      for (let off = 0; off < 60; off += 2) {
        lines.push(`${PID},${iso(w0 + off)},AUD,${k},${off},-25.0,0.85`);
      }
    } else {
      lines.push(`${PID},${iso(w0)},AUD,${k},0,-55.0,0.02`);
    }
  }
  return lines.join("\n");
}

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/openapi.json`);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("sync service did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "contextema.cli", "serve", "--virtual-clock", "--listen", `127.0.0.1:${PORT}`],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("dashboard round trip against the live service", () => {
  it(
    "a submitted message becomes selectable in the next contextual prompts",
    async () => {
      const api = new StudyHarness(BASE);
      await api.enroll(PID, iso(DAY0));

      // submit through the dashboard's own form logic
      const text = "But it was fun when you played cards with Joe at the clubhouse";
      let form = withText(initialFormState(PID), text);
      form = await submitMessage(form, api);
      expect(form.error).toBeNull();
      expect(form.justAdded).toBeTruthy();

      // it appears in the participant's message list without a reload
      const listed = await api.messages(PID);
      expect(listed.some((m) => m.participant_scope === PID && m.text === text)).toBe(true);

      // drive simulated days; the engine draws personalized messages with
      // probability 0.6 per contextual prompt, so a few prompts suffice
      let found = false;
      for (let day = 0; day < 4 && !found; day += 1) {
        const dayStart = DAY0 + day * 86400;
        await api.ingest(PID, iso(dayStart), dayTrace(dayStart));
        for (let hour = 1; hour <= 24; hour += 1) {
          await api.tick(iso(dayStart + hour * 3600));
        }
        const sessions: Session[] = await api.sessions(PID);
        const contextual = sessions.filter((s) => s.kind === "contextual");
        expect(contextual.length).toBeGreaterThan(0);
        for (const session of contextual) {
          expect(session.detected_context).toBe("home/with_others");
          for (const node of session.script.nodes) {
            if (node.node_id.endsWith("challenge") && node.prompt === text) {
              found = true;
            }
          }
        }
      }
      expect(found).toBe(true);
    },
    120_000,
  );
});
