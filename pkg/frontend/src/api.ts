/** Typed client for the lab's JSON-over-HTTP API.
 *
 * The fetch function is injected so tests can drive the client without a
 * server. All methods throw ApiError on non-2xx responses with the server's
 * machine-readable error code when one is present.
 */

export interface DocResult {
  doc_id: string;
  text: string;
  title: string | null;
  score?: number;
}

export interface SearchResponse {
  query: string;
  k: number;
  results: DocResult[];
}

export interface Suggestion {
  text: string;
  ndcg: number | null;
  ip_gold: number | null;
}

export interface SuggestResponse {
  query_id: string;
  method: string;
  suggestions: Suggestion[];
}

export interface TraversalStep {
  kappa: number;
  text: string;
  reencode_similarity: number;
  ndcg_at_10: number;
  ip_with_gold: number;
}

export interface TraverseResponse {
  query: string;
  doc_id: string;
  steps: TraversalStep[];
  original_ndcg_at_10: number;
  pca: {
    path: [number, number][];
    results: { doc_id: string; xy: [number, number] }[];
    gold: [number, number];
  };
}

export interface SessionStepResponse {
  session_id: string;
  history_length: number;
  result: SearchResponse;
}

export interface SessionState {
  session_id: string;
  history: {
    query: string;
    chosen_suggestion: string | null;
    top_doc_ids: string[];
  }[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? { method: "GET" }
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          };
    const resp = await this.fetchFn(this.base + path, init);
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const code = (payload as { error?: string }).error ?? "HttpError";
      const message = (payload as { message?: string }).message ?? resp.statusText;
      throw new ApiError(resp.status, code, message);
    }
    return payload as T;
  }

  search(query: string, k = 10): Promise<SearchResponse> {
    return this.request("/search", { query, k });
  }

  suggest(query: string, method: string, n = 10): Promise<SuggestResponse> {
    return this.request("/suggest", { query, method, n });
  }

  traverse(query: string, docId: string, steps: number): Promise<TraverseResponse> {
    return this.request("/traverse", { query, doc_id: docId, steps });
  }

  doc(docId: string): Promise<DocResult> {
    return this.request(`/doc/${encodeURIComponent(docId)}`);
  }

  createSession(): Promise<SessionState> {
    return this.request("/session", {});
  }

  sessionStep(
    sessionId: string,
    query: string,
    chosenSuggestion: string | null,
  ): Promise<SessionStepResponse> {
    return this.request(`/session/${encodeURIComponent(sessionId)}/step`, {
      query,
      chosen_suggestion: chosenSuggestion,
    });
  }
}
