// Typed client for the drumweave HTTP API with stale-response dropping.
//
// Each logical "slot" (one per generation panel) carries a token counter;
// a response is delivered only if no newer request was issued on that
// slot in the meantime, so rapid re-runs can never apply out of order.

import {
  ApiErrorBody,
  InterpolateRequest,
  InterpolationResult,
  Pattern,
  PatternPage,
  SwirlRequest,
  SwirlResult,
} from './types';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(resp: Response): Promise<ApiError> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to a generic error
  }
  return new ApiError(resp.status, body?.code ?? 'error',
    body?.message ?? `request failed with status ${resp.status}`);
}

export class StaleResponseError extends Error {
  constructor() {
    super('response superseded by a newer request');
  }
}

export class ApiClient {
  private tokens = new Map<string, number>();

  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  /** Runs the request tagged to a slot; stale results reject. */
  private async tagged<T>(slot: string, run: () => Promise<T>): Promise<T> {
    const token = (this.tokens.get(slot) ?? 0) + 1;
    this.tokens.set(slot, token);
    const result = await run();
    if (this.tokens.get(slot) !== token) throw new StaleResponseError();
    return result;
  }

  async listPatterns(genre?: string, page = 0, pageSize = 200): Promise<PatternPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (genre) params.set('genre', genre);
    return this.request<PatternPage>(`/api/patterns?${params}`);
  }

  async interpolate(req: InterpolateRequest): Promise<InterpolationResult> {
    return this.tagged('interpolate', () =>
      this.request<InterpolationResult>('/api/interpolate', {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(req),
      }));
  }

  async swirl(req: SwirlRequest): Promise<SwirlResult> {
    return this.tagged('swirl', () =>
      this.request<SwirlResult>('/api/swirl', {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(req),
      }));
  }

  async exportMidi(patterns: Pattern[], tempoBpm: number): Promise<Blob> {
    const resp = await this.fetchFn(this.baseUrl + '/api/export', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ tempo_bpm: tempoBpm, patterns }),
    });
    if (!resp.ok) throw await parseError(resp);
    return resp.blob();
  }

  /** Cheap reachability probe for the status banner. */
  async ping(): Promise<boolean> {
    try {
      const resp = await this.fetchFn(this.baseUrl + '/api/patterns?page_size=1');
      return resp.ok;
    } catch {
      return false;
    }
  }
}
