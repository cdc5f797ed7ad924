// Shared test utilities: a node-http fetch, a call recorder, and the audit
// that every request the UI makes stays on the documented API surface.

import http from "node:http";
import { expect } from "vitest";
import type { FetchInit, FetchLike, FetchResponse } from "../src/api.js";

export interface RecordedCall {
  method: string;
  url: string;
}

/** Minimal fetch over node:http so tests do not depend on environment fetch. */
export const httpFetch: FetchLike = (url, init) =>
  new Promise<FetchResponse>((resolve, reject) => {
    const request = http.request(
      url,
      { method: init.method, headers: init.headers },
      (response) => {
        const chunks: Buffer[] = [];
        response.on("data", (chunk) => chunks.push(chunk));
        response.on("end", () => {
          const status = response.statusCode ?? 0;
          const body = Buffer.concat(chunks).toString("utf-8");
          resolve({
            ok: status >= 200 && status < 300,
            status,
            text: () => Promise.resolve(body),
          });
        });
      },
    );
    request.on("error", reject);
    if (init.body !== undefined) {
      request.write(init.body);
    }
    request.end();
  });

export function recordingFetch(inner: FetchLike): { fetch: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const wrapped: FetchLike = (url, init: FetchInit) => {
    calls.push({ method: init.method, url });
    return inner(url, init);
  };
  return { fetch: wrapped, calls };
}

const TOOL_NAMES = "(list_directory|search_code|read_file|list_file_functions|read_function)";

/** Every route the session service documents, as method + path patterns. */
export const DOCUMENTED_ROUTES: { method: string; path: RegExp }[] = [
  { method: "GET", path: /^\/tasks$/ },
  { method: "GET", path: /^\/tasks\/[^/]+$/ },
  { method: "POST", path: /^\/sessions$/ },
  { method: "GET", path: /^\/sessions\/[^/]+$/ },
  { method: "POST", path: new RegExp(`^\\/sessions\\/[^/]+\\/tools\\/${TOOL_NAMES}$`) },
  { method: "POST", path: /^\/sessions\/[^/]+\/submit$/ },
  { method: "DELETE", path: /^\/sessions\/[^/]+$/ },
];

export function assertWithinApi(calls: RecordedCall[], baseUrl: string): void {
  expect(calls.length).toBeGreaterThan(0);
  for (const call of calls) {
    expect(call.url.startsWith(baseUrl)).toBe(true);
    const path = call.url.slice(baseUrl.length);
    const allowed = DOCUMENTED_ROUTES.some(
      (route) => route.method === call.method && route.path.test(path),
    );
    expect(allowed, `undocumented request: ${call.method} ${path}`).toBe(true);
  }
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 30_000,
  intervalMs = 50,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
  throw new Error("condition not met before timeout");
}

/** Set a textarea's value and fire the input event the way a user edit does. */
export function typeInto(area: HTMLTextAreaElement, text: string): void {
  area.value = text;
  area.dispatchEvent(new Event("input", { bubbles: true }));
}

export function click(element: Element | null): void {
  if (!element) throw new Error("element to click not found");
  (element as HTMLElement).click();
}
