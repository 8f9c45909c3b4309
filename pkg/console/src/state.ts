import type { ConsoleApi } from "./api.js";
import type {
  Hit,
  IndicatorRecord,
  QueryDto,
  Report,
  ReportRow,
  SourceDoc,
} from "./types.js";

/** Everything the console renders. Derived solely from /v1 responses;
 * the client never scores or extracts anything itself. */
export interface ConsoleViewState {
  indicator: string;
  keywords: string;
  source: string;
  indicatorId: string;
  hits: Hit[];
  topRawScore: number;
  searchedQuery: QueryDto | null;
  ledger: IndicatorRecord[];
  report: Report | null;
  sources: SourceDoc[];
  pending: boolean;
  error: string | null;
  notice: string | null;
}

export interface ReportViewRow extends ReportRow {
  redefinitions: number | null;
}

type Listener = (state: ConsoleViewState) => void;

function initialState(): ConsoleViewState {
  return {
    indicator: "",
    keywords: "",
    source: "",
    indicatorId: "",
    hits: [],
    topRawScore: 0,
    searchedQuery: null,
    ledger: [],
    report: null,
    sources: [],
    pending: false,
    error: null,
    notice: null,
  };
}

export function slugify(name: string): string {
  return name
    .toLowerCase()
    .replace(/[^a-z0-9]+/g, "-")
    .replace(/^-+|-+$/g, "");
}

/** Join report rows with the ledger so the report view can show how many
 * redefinitions each indicator needed. */
export function reportViewRows(
  report: Report | null,
  ledger: IndicatorRecord[],
): ReportViewRow[] {
  if (!report) return [];
  const counts = new Map(ledger.map((r) => [r.indicator_id, r.redefinition_count]));
  return report.rows.map((row) => ({
    ...row,
    redefinitions: counts.get(row.indicator) ?? null,
  }));
}

export class ConsoleStore {
  private state: ConsoleViewState = initialState();
  private listeners: Listener[] = [];
  private inflight: AbortController | null = null;

  constructor(private readonly api: ConsoleApi) {}

  getState(): ConsoleViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<ConsoleViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  setField(field: "indicator" | "keywords" | "source" | "indicatorId", value: string): void {
    // editing the query invalidates any in-flight request
    if (this.inflight) {
      this.inflight.abort();
      this.inflight = null;
    }
    this.update({ [field]: value } as Partial<ConsoleViewState>);
  }

  /** Submit the three-stage form. Empty indicator: inline validation, no
   * request leaves the client. */
  async submit(): Promise<void> {
    const { indicator, keywords, source } = this.state;
    if (!indicator.trim()) {
      this.update({ error: "Enter an indicator to search for.", notice: null });
      return;
    }
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.update({ pending: true, error: null, notice: null });
    try {
      const result = await this.api.search(
        indicator,
        keywords.trim() || undefined,
        source.trim() || undefined,
        controller.signal,
      );
      if (controller.signal.aborted) return;
      this.update({
        hits: result.hits,
        topRawScore: result.top_raw_score,
        searchedQuery: result.query,
        pending: false,
      });
    } catch (err) {
      if (controller.signal.aborted) return;
      this.update({ pending: false, error: describeError(err), hits: [], topRawScore: 0 });
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  /** Record the current query as a refinement step with the human verdict. */
  async recordStep(achieved: boolean): Promise<IndicatorRecord | null> {
    const { indicator, keywords, source, indicatorId } = this.state;
    if (!indicator.trim()) {
      this.update({ error: "Run a query before recording a step." });
      return null;
    }
    const id = indicatorId.trim() || slugify(indicator);
    try {
      const { record } = await this.api.recordRefinement({
        indicator_id: id,
        indicator,
        keywords: keywords.trim() || null,
        source: source.trim() || null,
        achieved,
      });
      this.update({
        indicatorId: id,
        notice: `Recorded step ${record.steps.length} for "${id}" (${record.redefinition_count} redefinitions).`,
        error: null,
      });
      await this.loadLedger();
      return record;
    } catch (err) {
      this.update({ error: describeError(err) });
      return null;
    }
  }

  async loadLedger(): Promise<void> {
    try {
      const { indicators } = await this.api.indicators();
      this.update({ ledger: indicators });
    } catch (err) {
      this.update({ error: describeError(err) });
    }
  }

  async loadReport(): Promise<void> {
    try {
      const [report] = await Promise.all([this.api.report(), this.loadLedger()]);
      this.update({ report });
    } catch (err) {
      this.update({ error: describeError(err) });
    }
  }

  async loadSources(): Promise<void> {
    try {
      const { sources } = await this.api.sources();
      this.update({ sources });
    } catch (err) {
      this.update({ error: describeError(err) });
    }
  }

  reportRows(): ReportViewRow[] {
    return reportViewRows(this.state.report, this.state.ledger);
  }
}

function describeError(err: unknown): string {
  if (err instanceof Error && err.name === "AbortError") return "Request cancelled.";
  if (err instanceof Error) return err.message || "The service is unreachable. Retry?";
  return "The service is unreachable. Retry?";
}
