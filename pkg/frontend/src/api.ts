/** Thin typed client over the sync-service HTTP API.
 *
 * The dashboard reads reports, context windows, goals, sessions, and
 * messages; posting a personalized message is its only write.
 */

import type {
  ContextWindow,
  Goal,
  Message,
  MessageCategory,
  ParticipantReport,
  Session,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
    private token?: string,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["x-api-token"] = this.token;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        ...init,
        headers: { ...this.headers(), ...(init?.headers ?? {}) },
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable (${String(err)})`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  report(participantId: string): Promise<ParticipantReport> {
    return this.request(`/v1/participants/${participantId}/report`);
  }

  contextWindows(participantId: string, from?: string, to?: string): Promise<ContextWindow[]> {
    const params = new URLSearchParams();
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    const qs = params.toString();
    return this.request(`/v1/participants/${participantId}/context${qs ? `?${qs}` : ""}`);
  }

  goals(participantId: string): Promise<Goal[]> {
    return this.request(`/v1/participants/${participantId}/goals`);
  }

  sessions(participantId: string): Promise<Session[]> {
    return this.request(`/v1/participants/${participantId}/sessions`);
  }

  messages(participantId: string): Promise<Message[]> {
    return this.request(`/v1/participants/${participantId}/messages`);
  }

  /** The dashboard's only write: add a personalized message. */
  postMessage(
    participantId: string,
    category: MessageCategory,
    text: string,
  ): Promise<Message> {
    return this.request(`/v1/participants/${participantId}/messages`, {
      method: "POST",
      body: JSON.stringify({ category, text }),
    });
  }

  protected post<T>(path: string, body: unknown): Promise<T> {
    return this.request(path, { method: "POST", body: JSON.stringify(body) });
  }
}
