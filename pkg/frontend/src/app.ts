/** DOM bindings: wires the session controller to the page and re-renders
 * from each state snapshot. All metric badges are API values verbatim. */

import { ApiClient, FetchLike } from "./api.js";
import { renderScatter, scatterMarks } from "./scatter.js";
import { SessionController, ViewState } from "./state.js";

const METHODS = ["rm3", "sampling", "prf", "plain"];

function el<T extends HTMLElement>(root: ParentNode, selector: string): T {
  const found = root.querySelector(selector);
  if (!found) {
    throw new Error(`missing element: ${selector}`);
  }
  return found as T;
}

function snippet(text: string, limit = 160): string {
  return text.length <= limit ? text : text.slice(0, limit - 1) + "…";
}

export function initApp(root: Document, fetchFn: FetchLike, base = ""): SessionController {
  const api = new ApiClient(fetchFn, base);

  const queryInput = el<HTMLInputElement>(root, "#query-input");
  const searchForm = el<HTMLFormElement>(root, "#search-form");
  const methodSelect = el<HTMLSelectElement>(root, "#method-select");
  const suggestBtn = el<HTMLButtonElement>(root, "#suggest-btn");
  const resultsList = el<HTMLUListElement>(root, "#results");
  const suggestionsList = el<HTMLUListElement>(root, "#suggestions");
  const historyList = el<HTMLOListElement>(root, "#history");
  const banner = el<HTMLDivElement>(root, "#banner");
  const retryBtn = el<HTMLButtonElement>(root, "#retry-btn");
  const stepsInput = el<HTMLInputElement>(root, "#steps-input");
  const slider = el<HTMLInputElement>(root, "#step-slider");
  const stepText = el<HTMLDivElement>(root, "#step-text");
  const stepList = el<HTMLOListElement>(root, "#traversal-steps");
  const scatterSvg = root.querySelector("#scatter") as SVGSVGElement;

  for (const method of METHODS) {
    const opt = root.createElement("option");
    opt.value = method;
    opt.textContent = method;
    methodSelect.appendChild(opt);
  }

  const render = (state: ViewState) => {
    // clicking a suggestion replaces the query box content
    if (queryInput.value !== state.query) {
      queryInput.value = state.query;
    }

    // banner (non-blocking)
    banner.hidden = state.banner === null;
    el<HTMLSpanElement>(banner, "#banner-text").textContent = state.banner ?? "";

    // results with snippets and a per-result traversal trigger
    resultsList.textContent = "";
    for (const doc of state.results) {
      const li = root.createElement("li");
      li.className = "result";
      const head = root.createElement("div");
      head.className = "result-head";
      const title = root.createElement("strong");
      title.textContent = doc.title ?? doc.doc_id;
      head.appendChild(title);
      if (doc.score !== undefined) {
        const score = root.createElement("span");
        score.className = "badge badge-score";
        score.textContent = doc.score.toFixed(3);
        head.appendChild(score);
      }
      const traverseBtn = root.createElement("button");
      traverseBtn.type = "button";
      traverseBtn.className = "traverse-btn";
      traverseBtn.dataset.docId = doc.doc_id;
      traverseBtn.textContent = "traverse →";
      traverseBtn.addEventListener("click", () => {
        void controller.startTraversal(doc.doc_id, Number(stepsInput.value) || 20);
      });
      head.appendChild(traverseBtn);
      const body = root.createElement("p");
      body.textContent = snippet(doc.text);
      li.appendChild(head);
      li.appendChild(body);
      resultsList.appendChild(li);
    }

    // suggestions with method / nDCG badges
    suggestionsList.textContent = "";
    if (state.suggestions) {
      for (const s of state.suggestions.suggestions) {
        const li = root.createElement("li");
        const btn = root.createElement("button");
        btn.type = "button";
        btn.className = "suggestion";
        btn.textContent = s.text;
        btn.addEventListener("click", () => {
          void controller.clickSuggestion(s.text);
        });
        li.appendChild(btn);
        const method = root.createElement("span");
        method.className = "badge badge-method";
        method.textContent = state.suggestions.method;
        li.appendChild(method);
        if (s.ndcg !== null) {
          const ndcg = root.createElement("span");
          ndcg.className = "badge badge-ndcg";
          ndcg.textContent = `nDCG ${s.ndcg.toFixed(2)}`;
          li.appendChild(ndcg);
        }
        suggestionsList.appendChild(li);
      }
    }

    // session history
    historyList.textContent = "";
    for (const entry of state.history) {
      const li = root.createElement("li");
      li.textContent = entry.chosen_suggestion
        ? `${entry.query} (picked suggestion)`
        : entry.query;
      historyList.appendChild(li);
    }

    // traversal panel
    if (state.traversal) {
      const k = state.traversal.steps.length;
      slider.min = "1";
      slider.max = String(k);
      slider.value = String(state.sliderStep);
      slider.disabled = false;
      const current = state.traversal.steps[state.sliderStep - 1];
      stepText.textContent = `κ=${current.kappa}: ${current.text} (nDCG@10 ${current.ndcg_at_10.toFixed(2)})`;
      stepList.textContent = "";
      for (const step of state.traversal.steps) {
        const li = root.createElement("li");
        li.className = "traversal-step";
        if (step.kappa === state.sliderStep) {
          li.classList.add("active");
        }
        li.textContent = `${step.text} [${step.ndcg_at_10.toFixed(2)}]`;
        stepList.appendChild(li);
      }
      if (scatterSvg) {
        renderScatter(scatterSvg, scatterMarks(state.traversal), state.sliderStep);
      }
    } else {
      slider.disabled = true;
      stepText.textContent = "";
      stepList.textContent = "";
    }
  };

  const controller = new SessionController(api, render);

  queryInput.addEventListener("input", () => {
    void controller.typeahead(queryInput.value);
  });
  searchForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void controller.commitSearch(queryInput.value);
  });
  methodSelect.addEventListener("change", () => {
    controller.setMethod(methodSelect.value);
  });
  suggestBtn.addEventListener("click", () => {
    void controller.requestSuggestions();
  });
  slider.addEventListener("input", () => {
    controller.setSlider(Number(slider.value));
  });
  retryBtn.addEventListener("click", () => {
    void controller.retry();
  });

  render(controller.getState());
  return controller;
}
