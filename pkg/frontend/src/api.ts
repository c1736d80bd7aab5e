/**
 * Typed client for the session server.
 *
 * Every mutation goes through these endpoints; server validation errors
 * surface verbatim as ApiError so the UI can show them without guessing.
 * The transport is injectable: tests and the offline demo swap fetch out.
 */

import type {
  EditsResult,
  ModifyResult,
  NodeEditDoc,
  PromptResult,
  PushEvent,
  SessionStateDoc,
  ViewDoc,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorType: string,
    message: string,
  ) {
    super(message);
  }
}

export interface SessionApi {
  createSession(sessionId?: string): Promise<SessionStateDoc>;
  getState(sessionId: string): Promise<SessionStateDoc>;
  submitPrompt(sessionId: string, prompt: string): Promise<PromptResult>;
  applyEdits(sessionId: string, edits: NodeEditDoc[]): Promise<EditsResult>;
  modifyNl(sessionId: string, instruction: string): Promise<ModifyResult>;
  confirm(sessionId: string): Promise<{ code: string }>;
  focusIntent(sessionId: string, intentId: string): Promise<{ view: ViewDoc }>;
  /** Push channel; returns an unsubscribe. Optional: offline mode has none. */
  subscribe?(sessionId: string, onEvent: (event: PushEvent) => void): () => void;
}

export class HttpSessionApi implements SessionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
    private readonly webSocketFactory?: (url: string) => WebSocket,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const reply = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await reply.json()) as Record<string, unknown>;
    if (!reply.ok) {
      throw new ApiError(
        reply.status,
        String(payload.error ?? "UnknownError"),
        String(payload.message ?? `request failed with ${reply.status}`),
      );
    }
    return payload as T;
  }

  async createSession(sessionId?: string): Promise<SessionStateDoc> {
    const created = await this.request<{ session_id: string; state: SessionStateDoc }>(
      "POST", "/v1/sessions", sessionId ? { session_id: sessionId } : {});
    return created.state;
  }

  getState(sessionId: string): Promise<SessionStateDoc> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  submitPrompt(sessionId: string, prompt: string): Promise<PromptResult> {
    return this.request("POST", `/v1/sessions/${sessionId}/prompt`, { prompt });
  }

  applyEdits(sessionId: string, edits: NodeEditDoc[]): Promise<EditsResult> {
    return this.request("POST", `/v1/sessions/${sessionId}/edits`, { edits });
  }

  modifyNl(sessionId: string, instruction: string): Promise<ModifyResult> {
    return this.request("POST", `/v1/sessions/${sessionId}/modify`, { instruction });
  }

  confirm(sessionId: string): Promise<{ code: string }> {
    return this.request("POST", `/v1/sessions/${sessionId}/confirm`);
  }

  focusIntent(sessionId: string, intentId: string): Promise<{ view: ViewDoc }> {
    return this.request("POST", `/v1/sessions/${sessionId}/focus`,
      { intent_id: intentId });
  }

  subscribe(sessionId: string, onEvent: (event: PushEvent) => void): () => void {
    const factory = this.webSocketFactory
      ?? (typeof WebSocket !== "undefined"
        ? (url: string) => new WebSocket(url)
        : undefined);
    if (!factory) return () => {};
    const wsUrl = this.baseUrl.replace(/^http/, "ws")
      + `/v1/sessions/${sessionId}/events`;
    const socket = factory(wsUrl);
    socket.onmessage = (message: MessageEvent) => {
      onEvent(JSON.parse(String(message.data)) as PushEvent);
    };
    return () => socket.close();
  }
}
