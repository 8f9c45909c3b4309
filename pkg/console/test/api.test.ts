import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("builds search URLs with optional keywords and source", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ query: {}, top_raw_score: 0, hits: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("http://backend:1234");
    await api.search("cotton stubble", "%", "D4");
    const url = fetchMock.mock.calls[0][0] as string;
    expect(url).toBe("http://backend:1234/v1/search?q=cotton+stubble&keywords=%25&source=D4");
  });

  it("posts refinements as JSON", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ record: {} }, 201));
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient().recordRefinement({
      indicator_id: "x", indicator: "X", achieved: true,
    });
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/v1/refinements");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string).achieved).toBe(true);
  });

  it("surfaces service error envelopes as ApiError", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse({ code: "UnknownSourceFilter", message: "no ingested source" }, 404),
    ));
    const err = await new ApiClient().search("x", undefined, "D9").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.code).toBe("UnknownSourceFilter");
  });

  it("returns the report CSV body verbatim", async () => {
    const csv = "S.No,Indicator\n1,x\n";
    vi.stubGlobal("fetch", vi.fn(async () => new Response(csv, { status: 200 })));
    expect(await new ApiClient().reportCsv()).toBe(csv);
  });
});
