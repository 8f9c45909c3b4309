/** Wire types for the /v1 API. Field names mirror the service responses. */

export interface Score {
  raw: number;
  normalized: number;
}

export interface HitEntity {
  kind: string;
  text: string;
  span: [number, number];
}

export type HighlightKind = "indicator" | "value" | "unit";

export interface Hit {
  unit_id: string;
  doc_id: string;
  source_type: string;
  fields: {
    text: string;
    indicator: string;
    value: string;
    unit: string;
    entities: string[];
    source: string;
  };
  origin?: { kind: string; ordinal?: number; [key: string]: unknown };
  score: Score;
  entities: HitEntity[];
  highlights: Partial<Record<HighlightKind, [number, number]>>;
}

export interface QueryDto {
  indicator_terms: string[];
  keywords: string[];
  source_filter: string | null;
}

export interface SearchResponse {
  query: QueryDto;
  top_raw_score: number;
  hits: Hit[];
}

export interface StepDto {
  query: QueryDto;
  top_raw_score: number;
  result_achieved: boolean;
  idempotency_key?: string;
}

export interface IndicatorRecord {
  indicator_id: string;
  steps: StepDto[];
  redefinition_count: number;
}

export interface ReportRow {
  serial: number;
  indicator: string;
  query: string;
  source_id: string;
  source_type: string;
  keywords: string;
  suitability: string;
  adaptability: string;
  relevance_score: number;
  status: "ACHIEVED" | "RELEVANT" | "NOT_ACHIEVED";
}

export interface TypeTotals {
  total: number;
  achieved: number;
  relevant: number;
  not_achieved: number;
}

export interface Report {
  rows: ReportRow[];
  totals: Record<string, TypeTotals>;
}

export interface SourceDoc {
  id: string;
  uri: string;
  source_type: string;
  title: string;
  retrieved_at: string;
  access_class: string;
  payload_ref: string;
}

export interface RefinementRequest {
  indicator_id: string;
  indicator: string;
  keywords?: string | null;
  source?: string | null;
  achieved: boolean;
  idempotency_key?: string;
}
