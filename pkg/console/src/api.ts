import type {
  IndicatorRecord,
  RefinementRequest,
  Report,
  SearchResponse,
  SourceDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

/** The slice of the /v1 API the console consumes. */
export interface ConsoleApi {
  search(
    indicator: string,
    keywords?: string,
    source?: string,
    signal?: AbortSignal,
  ): Promise<SearchResponse>;
  recordRefinement(body: RefinementRequest): Promise<{ record: IndicatorRecord }>;
  indicators(): Promise<{ indicators: IndicatorRecord[] }>;
  report(): Promise<Report>;
  reportCsv(): Promise<string>;
  sources(): Promise<{ sources: SourceDoc[] }>;
}

/** Thin fetch client for the /v1 API; the console has no logic of its own
 * beyond presenting these responses. */
export class ApiClient implements ConsoleApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let code = `http-${resp.status}`;
      let message = resp.statusText;
      try {
        const body = (await resp.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  search(
    indicator: string,
    keywords?: string,
    source?: string,
    signal?: AbortSignal,
  ): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: indicator });
    if (keywords) params.set("keywords", keywords);
    if (source) params.set("source", source);
    return this.request<SearchResponse>(`/v1/search?${params}`, { signal });
  }

  recordRefinement(body: RefinementRequest): Promise<{ record: IndicatorRecord }> {
    return this.request(`/v1/refinements`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  indicators(): Promise<{ indicators: IndicatorRecord[] }> {
    return this.request(`/v1/indicators`);
  }

  report(): Promise<Report> {
    return this.request(`/v1/report`);
  }

  async reportCsv(): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/v1/report?format=csv`);
    if (!resp.ok) {
      throw new ApiError(resp.status, `http-${resp.status}`, resp.statusText);
    }
    return resp.text();
  }

  sources(): Promise<{ sources: SourceDoc[] }> {
    return this.request(`/v1/sources`);
  }
}
