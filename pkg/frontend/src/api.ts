// Thin typed wrapper over the backend JSON contract. The request body
// must match the server's schema bit-exactly, so it is built in one
// place and covered by contract tests.

export const BASE_URL = ""; // same origin; the backend serves this page

export interface TranslateRequest {
  text: string;
  max_len?: number;
}

export interface TranslateResponse {
  translation: string;
  tokens: string[];
  model_id: string;
  latency_ms: number;
}

export interface HealthResponse {
  status: string;
  model_id: string | null;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
  }
}

export function buildTranslateRequest(
  text: string,
  maxLen?: number
): TranslateRequest {
  const body: TranslateRequest = { text: text.trim() };
  if (maxLen !== undefined) {
    body.max_len = maxLen;
  }
  return body;
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") return body.error;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `${response.status} ${response.statusText}`;
}

export async function postTranslate(
  request: TranslateRequest,
  baseUrl: string = BASE_URL
): Promise<TranslateResponse> {
  const response = await fetch(`${baseUrl}/translate`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(request),
  });
  if (!response.ok) {
    throw new ApiError(response.status, await errorMessage(response));
  }
  return (await response.json()) as TranslateResponse;
}

export async function fetchHealth(
  baseUrl: string = BASE_URL
): Promise<HealthResponse> {
  const response = await fetch(`${baseUrl}/health`);
  if (!response.ok) {
    throw new ApiError(response.status, await errorMessage(response));
  }
  return (await response.json()) as HealthResponse;
}
