/** API client: paths, query building, token header, and error mapping. */

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function recordingFetch(status = 200, body: unknown = {}) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchImpl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { calls, fetchImpl };
}

describe("api client", () => {
  it("builds the documented endpoint paths", async () => {
    const { calls, fetchImpl } = recordingFetch(200, []);
    const api = new ApiClient("http://svc", fetchImpl);
    await api.report("p1").catch(() => undefined);
    await api.contextWindows("p1", "2026-03-02T00:00:00Z");
    await api.goals("p1");
    await api.sessions("p1");
    await api.messages("p1");
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc/v1/participants/p1/report",
      "http://svc/v1/participants/p1/context?from=2026-03-02T00%3A00%3A00Z",
      "http://svc/v1/participants/p1/goals",
      "http://svc/v1/participants/p1/sessions",
      "http://svc/v1/participants/p1/messages",
    ]);
  });

  it("sends the shared token header when configured", async () => {
    const { calls, fetchImpl } = recordingFetch(200, []);
    const api = new ApiClient("http://svc", fetchImpl, "sekrit");
    await api.goals("p1");
    expect((calls[0].init?.headers as Record<string, string>)["x-api-token"]).toBe("sekrit");
  });

  it("maps error bodies into ApiError", async () => {
    const { fetchImpl } = recordingFetch(404, { detail: "not enrolled" });
    const api = new ApiClient("http://svc", fetchImpl);
    await expect(api.report("ghost")).rejects.toMatchObject({
      status: 404,
      detail: "not enrolled",
    });
  });

  it("wraps network failures as status 0", async () => {
    const api = new ApiClient("http://svc", async () => {
      throw new Error("refused");
    });
    const error = await api.report("p1").catch((e: ApiError) => e);
    expect(error.status).toBe(0);
    expect(error.detail).toContain("refused");
  });
});
