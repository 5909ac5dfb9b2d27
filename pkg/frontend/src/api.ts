// Typed client for the /v1 protocol.
//
// Every call is funneled through one queue, so the service never sees two
// in-flight requests from the same session. The inFlight/maxInFlight
// counters exist so tests can verify that ordering contract.

import type {
  AnswerResponse,
  AnswerValue,
  Card,
  CloseResponse,
  ErrorBody,
  HealthResponse,
  NextResponse,
  Question,
  SessionMode,
  StartResponse,
  SuggestionResponse,
} from "./protocol";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

export interface ConsultationApi {
  startSession(mode: SessionMode, userRef?: string): Promise<StartResponse>;
  submitAnswer(
    sessionId: string,
    featureId: string,
    value: AnswerValue,
  ): Promise<AnswerResponse>;
  nextCard(sessionId: string): Promise<NextResponse>;
  rate(sessionId: string, recId: string, score: number): Promise<void>;
  suggest(sessionId: string, text: string): Promise<SuggestionResponse>;
  close(sessionId: string): Promise<CloseResponse>;
}

export class ConsultationClient implements ConsultationApi {
  readonly baseUrl: string;
  inFlight = 0;
  maxInFlight = 0;
  requestCount = 0;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async startSession(mode: SessionMode, userRef?: string): Promise<StartResponse> {
    const body: Record<string, unknown> = { mode };
    if (userRef !== undefined) body.user_ref = userRef;
    return this.request<StartResponse>("POST", "/v1/sessions", body);
  }

  async submitAnswer(
    sessionId: string,
    featureId: string,
    value: AnswerValue,
  ): Promise<AnswerResponse> {
    return this.request<AnswerResponse>(
      "POST",
      `/v1/sessions/${sessionId}/answers`,
      { feature_id: featureId, value },
    );
  }

  async nextCard(sessionId: string): Promise<NextResponse> {
    return this.request<NextResponse>("POST", `/v1/sessions/${sessionId}/next`);
  }

  async rate(sessionId: string, recId: string, score: number): Promise<void> {
    await this.request<Record<string, never>>(
      "POST",
      `/v1/sessions/${sessionId}/ratings`,
      { rec_id: recId, score },
    );
  }

  async suggest(sessionId: string, text: string): Promise<SuggestionResponse> {
    return this.request<SuggestionResponse>(
      "POST",
      `/v1/sessions/${sessionId}/suggestions`,
      { text },
    );
  }

  async close(sessionId: string): Promise<CloseResponse> {
    return this.request<CloseResponse>("POST", `/v1/sessions/${sessionId}/close`);
  }

  async health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("GET", "/v1/health");
  }

  private request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const run = () => this.send<T>(method, path, body);
    // chain regardless of the previous call's outcome; errors must not jam
    // the queue
    const result = this.queue.then(run, run);
    this.queue = result.catch(() => undefined);
    return result;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.inFlight += 1;
    this.maxInFlight = Math.max(this.maxInFlight, this.inFlight);
    this.requestCount += 1;
    try {
      const init: RequestInit = { method };
      if (body !== undefined) {
        init.headers = { "content-type": "application/json" };
        init.body = JSON.stringify(body);
      }
      const response = await fetch(this.baseUrl + path, init);
      const payload: unknown = await response.json();
      if (!response.ok) {
        const err = payload as Partial<ErrorBody>;
        throw new ApiError(
          response.status,
          err.error_code ?? "UnknownError",
          err.message ?? `request failed with status ${response.status}`,
        );
      }
      return payload as T;
    } finally {
      this.inFlight -= 1;
    }
  }
}

export function isReady(res: AnswerResponse): res is { ready: true; count: number } {
  return "ready" in res && res.ready === true;
}

export function isExhausted(res: NextResponse): res is { exhausted: true } {
  return "exhausted" in res && res.exhausted === true;
}

export type { AnswerValue, Card, Question, SessionMode };
