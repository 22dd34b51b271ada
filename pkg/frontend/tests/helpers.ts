// Shared test plumbing: an intercepting fetch that serves canned bodies and
// records everything, so tests can assert displayed values appear verbatim
// in an intercepted API response.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const fixturesDir = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture(name: string): string {
  return readFileSync(join(fixturesDir, name), "utf-8");
}

export interface Intercepted {
  url: string;
  method: string;
  requestBody: string | null;
  responseBody: string;
}

export interface FakeFetch {
  fetchFn: (input: string, init?: RequestInit) => Promise<Response>;
  calls: Intercepted[];
  /** Route table: first predicate match wins. */
  routes: Array<{
    match: (url: string, method: string) => boolean;
    status?: number;
    body: string | (() => string);
  }>;
}

export function makeFakeFetch(): FakeFetch {
  const fake: FakeFetch = {
    calls: [],
    routes: [],
    fetchFn: async (input, init) => {
      const method = init?.method ?? "GET";
      for (const route of fake.routes) {
        if (route.match(input, method)) {
          const body = typeof route.body === "function" ? route.body() : route.body;
          fake.calls.push({
            url: input,
            method,
            requestBody: typeof init?.body === "string" ? init.body : null,
            responseBody: body,
          });
          return new Response(body, {
            status: route.status ?? 200,
            headers: { "content-type": "application/json" },
          });
        }
      }
      throw new Error(`no fake route for ${method} ${input}`);
    },
  };
  return fake;
}

/** Every number in a parsed JSON body, rendered the way the UI renders
 * numbers (String(value)); the fidelity check asserts displayed text is a
 * member of this set. */
export function collectNumbers(value: unknown, into: Set<string> = new Set()): Set<string> {
  if (typeof value === "number") {
    into.add(String(value));
  } else if (Array.isArray(value)) {
    for (const item of value) collectNumbers(item, into);
  } else if (value !== null && typeof value === "object") {
    for (const item of Object.values(value)) collectNumbers(item, into);
  }
  return into;
}
