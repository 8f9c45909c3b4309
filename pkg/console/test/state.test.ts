import { describe, expect, it, vi } from "vitest";

import type { ConsoleApi } from "../src/api.js";
import { ConsoleStore, reportViewRows, slugify } from "../src/state.js";
import type { Hit, IndicatorRecord, Report, SearchResponse } from "../src/types.js";

function searchResponse(ids: string[]): SearchResponse {
  const hits: Hit[] = ids.map((id, i) => ({
    unit_id: id,
    doc_id: "D1",
    source_type: "HTML",
    fields: { text: id, indicator: "", value: "", unit: "", entities: [], source: "" },
    score: { raw: 10 - i, normalized: 1 - i / 10 },
    entities: [],
    highlights: {},
  }));
  return {
    query: { indicator_terms: ["x"], keywords: [], source_filter: null },
    top_raw_score: hits.length ? hits[0].score.raw : 0,
    hits,
  };
}

function fakeApi(overrides: Partial<ConsoleApi> = {}): ConsoleApi {
  return {
    search: vi.fn(async () => searchResponse(["a", "b"])),
    recordRefinement: vi.fn(async (body) => ({
      record: {
        indicator_id: body.indicator_id,
        steps: [{ query: { indicator_terms: [body.indicator], keywords: [], source_filter: null }, top_raw_score: 1, result_achieved: body.achieved }],
        redefinition_count: 0,
      } satisfies IndicatorRecord,
    })),
    indicators: vi.fn(async () => ({ indicators: [] })),
    report: vi.fn(async () => ({ rows: [], totals: {} })),
    reportCsv: vi.fn(async () => "S.No\n"),
    sources: vi.fn(async () => ({ sources: [] })),
    ...overrides,
  };
}

describe("ConsoleStore", () => {
  it("submits a query and stores the hits", async () => {
    const api = fakeApi();
    const store = new ConsoleStore(api);
    store.setField("indicator", "cotton exports");
    store.setField("keywords", "tonnes");
    await store.submit();
    expect(api.search).toHaveBeenCalledWith("cotton exports", "tonnes", undefined, expect.anything());
    expect(store.getState().hits).toHaveLength(2);
    expect(store.getState().topRawScore).toBe(10);
    expect(store.getState().error).toBeNull();
  });

  it("blocks empty submissions without calling the service", async () => {
    const api = fakeApi();
    const store = new ConsoleStore(api);
    await store.submit();
    expect(api.search).not.toHaveBeenCalled();
    expect(store.getState().error).toMatch(/indicator/i);
  });

  it("cancels the in-flight request when a new one is submitted", async () => {
    let firstSignal: AbortSignal | undefined;
    let release!: (value: SearchResponse) => void;
    const slow = new Promise<SearchResponse>((resolve) => (release = resolve));
    const api = fakeApi({
      search: vi.fn((indicator, _kw, _src, signal) => {
        if (!firstSignal) {
          firstSignal = signal;
          return slow;
        }
        return Promise.resolve(searchResponse(["fresh"]));
      }),
    });
    const store = new ConsoleStore(api);
    store.setField("indicator", "first");
    const pending = store.submit();
    store.setField("indicator", "second");
    await store.submit();
    expect(firstSignal?.aborted).toBe(true);
    release(searchResponse(["stale"]));
    await pending;
    expect(store.getState().hits.map((h) => h.unit_id)).toEqual(["fresh"]);
  });

  it("reports an error banner when the service is unreachable", async () => {
    const api = fakeApi({ search: vi.fn(async () => { throw new TypeError("fetch failed"); }) });
    const store = new ConsoleStore(api);
    store.setField("indicator", "cotton");
    await store.submit();
    expect(store.getState().error).toBeTruthy();
    expect(store.getState().hits).toEqual([]);
  });

  it("records a step with a slugged default ledger id and refreshes the ledger", async () => {
    const api = fakeApi();
    const store = new ConsoleStore(api);
    store.setField("indicator", "Cotton stubble");
    store.setField("keywords", "%");
    store.setField("source", "D4");
    const record = await store.recordStep(true);
    expect(record?.indicator_id).toBe("cotton-stubble");
    expect(api.recordRefinement).toHaveBeenCalledWith({
      indicator_id: "cotton-stubble",
      indicator: "Cotton stubble",
      keywords: "%",
      source: "D4",
      achieved: true,
    });
    expect(api.indicators).toHaveBeenCalled();
  });
});

describe("report view rows", () => {
  it("joins report rows with ledger redefinition counts", () => {
    const report: Report = {
      rows: [
        { serial: 1, indicator: "cotton-stubble", query: "cotton stubble", source_id: "D4",
          source_type: "PDF", keywords: "%", suitability: "H", adaptability: "L",
          relevance_score: 1.0, status: "ACHIEVED" },
      ],
      totals: { Total: { total: 1, achieved: 1, relevant: 0, not_achieved: 0 } },
    };
    const ledger: IndicatorRecord[] = [
      { indicator_id: "cotton-stubble", steps: [], redefinition_count: 2 } as unknown as IndicatorRecord,
    ];
    const rows = reportViewRows(report, ledger);
    expect(rows[0].redefinitions).toBe(2);
  });
});

describe("slugify", () => {
  it("normalizes indicator names into ledger ids", () => {
    expect(slugify("Cotton stubble")).toBe("cotton-stubble");
    expect(slugify("  Area of cotton planted! ")).toBe("area-of-cotton-planted");
  });
});
