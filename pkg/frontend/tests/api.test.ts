import { afterEach, describe, expect, test, vi } from "vitest";
import { ApiError, ConsultationClient, isExhausted, isReady } from "../src/api";

interface Recorded {
  method: string;
  url: string;
  body: unknown;
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function stubFetch(
  reply: (call: Recorded) => Response | Promise<Response>,
): Recorded[] {
  const calls: Recorded[] = [];
  vi.stubGlobal(
    "fetch",
    vi.fn(async (url: string, init?: RequestInit) => {
      const call: Recorded = {
        method: init?.method ?? "GET",
        url: String(url),
        body: init?.body === undefined ? undefined : JSON.parse(String(init.body)),
      };
      calls.push(call);
      return reply(call);
    }),
  );
  return calls;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("request shapes", () => {
  test("each operation hits its documented path with its documented body", async () => {
    const calls = stubFetch((call) => {
      if (call.url.endsWith("/v1/sessions")) {
        return jsonResponse(200, {
          session_id: "s-1",
          question: {
            feature_id: "subject",
            prompt: "Which subject?",
            kind: "categorical",
            required: true,
            values: ["math"],
          },
        });
      }
      return jsonResponse(200, {});
    });
    const client = new ConsultationClient("http://svc.test/");

    await client.startSession("identified", "prof@example.edu");
    await client.submitAnswer("s-1", "subject", "math");
    await client.nextCard("s-1");
    await client.rate("s-1", "rec-x", 5);
    await client.suggest("s-1", "Try gallery walks.");
    await client.close("s-1");
    await client.health();

    expect(calls.map((c) => [c.method, c.url, c.body])).toEqual([
      [
        "POST",
        "http://svc.test/v1/sessions",
        { mode: "identified", user_ref: "prof@example.edu" },
      ],
      [
        "POST",
        "http://svc.test/v1/sessions/s-1/answers",
        { feature_id: "subject", value: "math" },
      ],
      ["POST", "http://svc.test/v1/sessions/s-1/next", undefined],
      ["POST", "http://svc.test/v1/sessions/s-1/ratings", { rec_id: "rec-x", score: 5 }],
      [
        "POST",
        "http://svc.test/v1/sessions/s-1/suggestions",
        { text: "Try gallery walks." },
      ],
      ["POST", "http://svc.test/v1/sessions/s-1/close", undefined],
      ["GET", "http://svc.test/v1/health", undefined],
    ]);
  });

  test("an anonymous start sends no user_ref key at all", async () => {
    const calls = stubFetch(() =>
      jsonResponse(200, { session_id: "s-2", question: {} }),
    );
    const client = new ConsultationClient("http://svc.test");

    await client.startSession("anonymous");
    expect(calls[0].body).toEqual({ mode: "anonymous" });
  });
});

describe("error mapping", () => {
  test("protocol errors become ApiError with code and status", async () => {
    stubFetch(() =>
      jsonResponse(400, {
        error_code: "NotInVocabulary",
        message: "'pottery' is not an allowed value for 'subject'",
      }),
    );
    const client = new ConsultationClient("http://svc.test");

    const failure = client.submitAnswer("s-1", "subject", "pottery");
    await expect(failure).rejects.toThrow(ApiError);
    await expect(failure).rejects.toMatchObject({
      status: 400,
      code: "NotInVocabulary",
      message: "'pottery' is not an allowed value for 'subject'",
    });
  });

  test("a failure does not jam the queue for the next call", async () => {
    let first = true;
    stubFetch(() => {
      if (first) {
        first = false;
        return jsonResponse(409, {
          error_code: "NotReady",
          message: "answers are still being collected",
        });
      }
      return jsonResponse(200, { exhausted: true });
    });
    const client = new ConsultationClient("http://svc.test");

    await expect(client.nextCard("s-1")).rejects.toThrow("still being collected");
    const res = await client.nextCard("s-1");
    expect(isExhausted(res)).toBe(true);
  });
});

describe("single-flight queue", () => {
  test("burst-issued calls run one at a time, in order", async () => {
    let live = 0;
    let worstConcurrency = 0;
    const order: number[] = [];
    stubFetch(async (call) => {
      live += 1;
      worstConcurrency = Math.max(worstConcurrency, live);
      await new Promise((res) => setTimeout(res, 5));
      order.push((call.body as { score: number }).score);
      live -= 1;
      return jsonResponse(200, {});
    });
    const client = new ConsultationClient("http://svc.test");

    await Promise.all(
      [1, 2, 3, 4, 5].map((score) => client.rate("s-1", "rec-x", score)),
    );
    expect(worstConcurrency).toBe(1);
    expect(order).toEqual([1, 2, 3, 4, 5]);
    expect(client.maxInFlight).toBe(1);
    expect(client.requestCount).toBe(5);
  });

  test("a rejected call does not block queued successors", async () => {
    stubFetch((call) => {
      if ((call.body as { score: number }).score === 2) {
        return jsonResponse(400, {
          error_code: "ScoreOutOfRange",
          message: "score must be an integer in 1..5",
        });
      }
      return jsonResponse(200, {});
    });
    const client = new ConsultationClient("http://svc.test");

    const results = await Promise.allSettled([
      client.rate("s-1", "rec-x", 1),
      client.rate("s-1", "rec-x", 2),
      client.rate("s-1", "rec-x", 3),
    ]);
    expect(results.map((r) => r.status)).toEqual([
      "fulfilled",
      "rejected",
      "fulfilled",
    ]);
    expect(client.maxInFlight).toBe(1);
  });
});

describe("response narrowing", () => {
  test("ready and question replies are told apart", async () => {
    let ready = false;
    stubFetch(() => {
      const body = ready
        ? { ready: true, count: 2 }
        : {
            question: {
              feature_id: "cohort",
              prompt: "How many students?",
              kind: "numeric",
              required: true,
              min: 0,
              max: 10,
            },
          };
      ready = true;
      return jsonResponse(200, body);
    });
    const client = new ConsultationClient("http://svc.test");

    const first = await client.submitAnswer("s-1", "subject", "math");
    expect(isReady(first)).toBe(false);
    const second = await client.submitAnswer("s-1", "cohort", 5);
    expect(isReady(second)).toBe(true);
  });
});
