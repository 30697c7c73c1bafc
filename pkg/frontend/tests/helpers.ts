/** Test doubles: a scriptable fetch and a tiny in-memory voting service. */

import type { FetchLike } from "../src/api.js";

export interface RecordedCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

export function jsonResponse(status: number, payload?: unknown): Response {
  return new Response(payload === undefined ? null : JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * A fetch stub with a queue of handlers per (method, path) pattern and a
 * transcript of every call, so tests can assert exact request counts.
 */
export function makeFetchStub() {
  const calls: RecordedCall[] = [];
  const handlers: Array<{
    method: string;
    path: string | RegExp;
    respond: (call: RecordedCall) => Response;
    once: boolean;
  }> = [];

  const fetchFn: FetchLike = async (url, init = {}) => {
    const method = (init.method ?? "GET").toUpperCase();
    const call: RecordedCall = {
      url,
      method,
      headers: (init.headers as Record<string, string>) ?? {},
      body: typeof init.body === "string" ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const index = handlers.findIndex(
      (h) =>
        h.method === method &&
        (typeof h.path === "string" ? url.endsWith(h.path) : h.path.test(url)),
    );
    if (index === -1) throw new Error(`unstubbed ${method} ${url}`);
    const handler = handlers[index];
    if (handler.once) handlers.splice(index, 1);
    return handler.respond(call);
  };

  return {
    fetchFn,
    calls,
    on(method: string, path: string | RegExp, respond: (call: RecordedCall) => Response) {
      handlers.push({ method: method.toUpperCase(), path, respond, once: false });
    },
    once(method: string, path: string | RegExp, respond: (call: RecordedCall) => Response) {
      handlers.push({ method: method.toUpperCase(), path, respond, once: true });
    },
    countOf(method: string, path: string): number {
      return calls.filter((c) => c.method === method && c.url.endsWith(path)).length;
    },
  };
}

export async function settle(rounds = 4): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
