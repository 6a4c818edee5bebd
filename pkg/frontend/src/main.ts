// Page bootstrap: wires the App state machine to the static markup.

import { App, UiState } from "./app.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const input = el<HTMLTextAreaElement>("input-text");
const submitButton = el<HTMLButtonElement>("submit-button");
const retryButton = el<HTMLButtonElement>("retry-button");
const output = el<HTMLDivElement>("translation");
const tokens = el<HTMLDivElement>("tokens");
const meta = el<HTMLDivElement>("meta");
const banner = el<HTMLDivElement>("error-banner");
const indicator = el<HTMLSpanElement>("health-indicator");

function render(state: UiState): void {
  submitButton.disabled = state.inFlight || !state.input.trim();
  banner.hidden = state.error === null;
  banner.textContent = state.error ?? "";
  retryButton.hidden = !state.retryable;
  if (state.response) {
    output.textContent = state.response.translation;
    tokens.textContent = state.response.tokens.join(" · ");
    meta.textContent =
      `${state.response.latency_ms} ms — ${state.response.model_id}`;
  } else {
    output.textContent = "";
    tokens.textContent = "";
    meta.textContent = "";
  }
  indicator.className = state.healthy ? "healthy" : "unhealthy";
  indicator.title = state.modelId ?? "backend unreachable";
}

const app = new App("", render);

input.addEventListener("input", () => app.setInput(input.value));
submitButton.addEventListener("click", () => void app.submit());
retryButton.addEventListener("click", () => void app.submit());
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && (event.ctrlKey || event.metaKey)) {
    void app.submit();
  }
});

app.startHealthPolling();
