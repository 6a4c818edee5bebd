// UI state machine for the translation page. All DOM access goes
// through `render`, so the submit/poll logic is testable against a
// mocked fetch without a browser.

import {
  ApiError,
  buildTranslateRequest,
  fetchHealth,
  postTranslate,
  TranslateResponse,
} from "./api.js";

export const HEALTH_POLL_MS = 10_000;

export interface UiState {
  input: string;
  inFlight: boolean;
  response: TranslateResponse | null;
  error: string | null; // mutually exclusive with response
  retryable: boolean; // show the retry control (503 model loading)
  healthy: boolean;
  modelId: string | null;
}

export function initialState(): UiState {
  return {
    input: "",
    inFlight: false,
    response: null,
    error: null,
    retryable: false,
    healthy: false,
    modelId: null,
  };
}

export class App {
  state: UiState = initialState();
  private pending: string | null = null; // queued input, latest wins
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly onRender: (state: UiState) => void = () => {}
  ) {}

  private render(): void {
    this.onRender(this.state);
  }

  setInput(text: string): void {
    this.state.input = text;
    this.render();
  }

  /** True when a submission would actually send a request. */
  canSubmit(): boolean {
    return this.state.input.trim().length > 0;
  }

  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    if (this.state.inFlight) {
      // single in-flight request; remember only the latest submission
      this.pending = this.state.input;
      return;
    }
    await this.send(this.state.input);
    while (this.pending !== null) {
      const next = this.pending;
      this.pending = null;
      await this.send(next);
    }
  }

  private async send(text: string): Promise<void> {
    this.state.inFlight = true;
    this.state.error = null;
    this.state.retryable = false;
    this.render();
    try {
      const response = await postTranslate(
        buildTranslateRequest(text),
        this.baseUrl
      );
      this.state.response = response;
      this.state.error = null;
    } catch (err) {
      // input stays in the box; response and error never coexist
      this.state.response = null;
      if (err instanceof ApiError) {
        this.state.error =
          err.status === 503 ? "model loading" : err.message;
        this.state.retryable = err.status === 503;
      } else {
        this.state.error = "network error";
      }
    } finally {
      this.state.inFlight = false;
      this.render();
    }
  }

  async pollHealth(): Promise<void> {
    try {
      const health = await fetchHealth(this.baseUrl);
      this.state.healthy = health.status === "ok";
      this.state.modelId = health.model_id;
    } catch {
      this.state.healthy = false;
      this.state.modelId = null;
    }
    this.render();
  }

  startHealthPolling(): void {
    void this.pollHealth();
    this.timer = setInterval(() => void this.pollHealth(), HEALTH_POLL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
