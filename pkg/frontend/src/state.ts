/** Session controller: all client state and API orchestration, DOM-free.
 *
 * The browser layer (app.ts) binds DOM events to these methods and re-renders
 * from the state snapshot on every change. Nothing here computes a metric;
 * every number shown comes from an API response.
 */

import {
  ApiClient,
  DocResult,
  SessionState,
  SuggestResponse,
  TraverseResponse,
} from "./api.js";

export interface ViewState {
  query: string;
  method: string;
  results: DocResult[];
  suggestions: SuggestResponse | null;
  traversal: TraverseResponse | null;
  sliderStep: number;
  history: SessionState["history"];
  banner: string | null;
  busy: boolean;
}

export type Listener = (state: ViewState) => void;

const initialState = (): ViewState => ({
  query: "",
  method: "rm3",
  results: [],
  suggestions: null,
  traversal: null,
  sliderStep: 1,
  history: [],
  banner: null,
  busy: false,
});

export class SessionController {
  private state = initialState();
  private searchToken = 0;
  private sessionId: string | null = null;
  private lastFailed: (() => Promise<void>) | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: Listener,
  ) {}

  getState(): ViewState {
    return this.state;
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    this.update({ busy: true });
    try {
      await action();
      this.lastFailed = null;
      this.update({ banner: null, busy: false });
    } catch (err) {
      this.lastFailed = action;
      const message = err instanceof Error ? err.message : String(err);
      this.update({ banner: message, busy: false });
    }
  }

  /** Re-run the last failed action (banner "retry" button). */
  async retry(): Promise<void> {
    const action = this.lastFailed;
    if (action) {
      await this.guard(action);
    }
  }

  setQuery(query: string): void {
    this.update({ query });
  }

  setMethod(method: string): void {
    this.update({ method });
  }

  /** Live search while typing: latest request wins, no session append. */
  async typeahead(query: string): Promise<void> {
    this.update({ query });
    if (!query.trim()) {
      this.update({ results: [] });
      return;
    }
    const token = ++this.searchToken;
    try {
      const resp = await this.api.search(query);
      if (token === this.searchToken) {
        this.update({ results: resp.results, banner: null });
      }
    } catch (err) {
      if (token === this.searchToken) {
        this.lastFailed = () => this.typeahead(query);
        this.update({ banner: err instanceof Error ? err.message : String(err) });
      }
    }
  }

  private async ensureSession(): Promise<string> {
    if (this.sessionId === null) {
      const session = await this.api.createSession();
      this.sessionId = session.session_id;
    }
    return this.sessionId;
  }

  /** Committed search: fetch results and append a session history step. */
  async commitSearch(query: string, chosenSuggestion: string | null = null): Promise<void> {
    await this.guard(async () => {
      this.searchToken++; // cancel any in-flight typeahead
      const sid = await this.ensureSession();
      const resp = await this.api.search(query);
      await this.api.sessionStep(sid, query, chosenSuggestion);
      this.update({
        query,
        results: resp.results,
        history: [
          ...this.state.history,
          {
            query,
            chosen_suggestion: chosenSuggestion,
            top_doc_ids: resp.results.map((r) => r.doc_id),
          },
        ],
      });
    });
  }

  /** Fetch suggestions for the current query with the selected method. */
  async requestSuggestions(): Promise<void> {
    const { query, method } = this.state;
    if (!query.trim()) {
      return;
    }
    await this.guard(async () => {
      const resp = await this.api.suggest(query, method);
      this.update({ suggestions: resp });
    });
  }

  /** Clicking a suggestion replaces the query and re-searches. */
  async clickSuggestion(text: string): Promise<void> {
    await this.commitSearch(text, text);
  }

  /** Walk the latent line from the current query to a target document. */
  async startTraversal(docId: string, steps: number): Promise<void> {
    const { query } = this.state;
    if (!query.trim()) {
      return;
    }
    await this.guard(async () => {
      const resp = await this.api.traverse(query, docId, steps);
      this.update({ traversal: resp, sliderStep: resp.steps.length });
    });
  }

  setSlider(step: number): void {
    const traversal = this.state.traversal;
    if (!traversal) {
      return;
    }
    const clamped = Math.min(Math.max(step, 1), traversal.steps.length);
    this.update({ sliderStep: clamped });
  }
}
