/** Shared test harness: mounts the real page and stubs the API server. */

import pageHtml from "../public/index.html?raw";
import { FetchLike } from "../src/api.js";
import { initApp } from "../src/app.js";
import { SessionController } from "../src/state.js";

export interface LoggedCall {
  path: string;
  method: string;
  body: Record<string, unknown>;
}

export interface FakeServer {
  fetch: FetchLike;
  calls: LoggedCall[];
  history: unknown[];
  failNext: { value: boolean };
}

const DOCS = [
  { doc_id: "d1", text: "harbor schedule ferry xylograph crossing times", title: "Harbor", score: 0.91 },
  { doc_id: "d2", text: "ferry ticket price schedule evening route", title: null, score: 0.72 },
  { doc_id: "d3", text: "tide chart morning harbor conditions", title: "Tides", score: 0.55 },
];

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function makeFakeServer(): FakeServer {
  const calls: LoggedCall[] = [];
  const history: unknown[] = [];
  const failNext = { value: false };

  const fetchFn: FetchLike = async (input, init) => {
    const path = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    calls.push({ path, method, body });
    if (failNext.value) {
      failNext.value = false;
      return json({ error: "Boom", message: "injected failure" }, 422);
    }
    if (path === "/search") {
      return json({ query: body.query, k: body.k, results: DOCS });
    }
    if (path === "/suggest") {
      return json({
        query_id: "q1",
        method: body.method,
        suggestions: [
          { text: `${body.query} xylograph`, ndcg: 1.0, ip_gold: 0.62 },
          { text: `${body.query} crossing`, ndcg: 0.5, ip_gold: 0.41 },
          { text: `${body.query} tide`, ndcg: null, ip_gold: null },
        ],
      });
    }
    if (path === "/session") {
      return json({ session_id: "s-1", history: [] });
    }
    if (path.startsWith("/session/") && path.endsWith("/step")) {
      history.push(body);
      return json({
        session_id: "s-1",
        history_length: history.length,
        result: { query: body.query, k: 10, results: DOCS },
      });
    }
    if (path === "/traverse") {
      const steps = Array.from({ length: body.steps as number }, (_, i) => ({
        kappa: i + 1,
        text: `rewrite number ${i + 1}`,
        reencode_similarity: 0.9,
        ndcg_at_10: i + 1 === body.steps ? 1.0 : 0.0,
        ip_with_gold: (i + 1) / (body.steps as number),
      }));
      return json({
        query: body.query,
        doc_id: body.doc_id,
        steps,
        original_ndcg_at_10: 0.0,
        pca: {
          path: Array.from({ length: (body.steps as number) + 1 }, (_, i) => [i, i * 0.5]),
          results: DOCS.map((d, i) => ({ doc_id: d.doc_id, xy: [i + 0.3, 2 - i] })),
          gold: [9.5, 4.2],
        },
      });
    }
    return json({ error: "NotFound", message: path }, 404);
  };

  return { fetch: fetchFn, calls, history, failNext };
}

export function mountApp(server: FakeServer): SessionController {
  const bodyMatch = pageHtml.match(/<body>([\s\S]*)<\/body>/);
  document.body.innerHTML = bodyMatch ? bodyMatch[1] : pageHtml;
  return initApp(document, server.fetch);
}

export function type(selector: string, value: string): void {
  const input = document.querySelector(selector) as HTMLInputElement;
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

export function submitSearch(): void {
  const form = document.querySelector("#search-form") as HTMLFormElement;
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function click(selector: string): void {
  const elem = document.querySelector(selector) as HTMLElement;
  if (!elem) {
    throw new Error(`nothing to click at ${selector}`);
  }
  elem.click();
}

export async function settle(): Promise<void> {
  // drain the microtask queue a few times so chained awaits finish
  for (let i = 0; i < 10; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}
