import { highlightSegments } from "./highlight.js";
import type { ConsoleViewState, ReportViewRow } from "./state.js";
import type { Hit, IndicatorRecord, Report } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderHit(hit: Hit): HTMLElement {
  const item = el("li", "hit");

  const head = el("div", "hit-head");
  head.appendChild(el("span", "hit-score", hit.score.raw.toFixed(4)));
  head.appendChild(el("span", "hit-norm", hit.score.normalized.toFixed(3)));
  head.appendChild(el("span", "hit-source", `${hit.doc_id} · ${hit.source_type}`));
  item.appendChild(head);

  const text = el("p", "hit-text");
  for (const segment of highlightSegments(hit)) {
    if (segment.kind === null) {
      text.appendChild(document.createTextNode(segment.text));
    } else {
      const mark = el("mark", `hl hl-${segment.kind}`, segment.text);
      text.appendChild(mark);
    }
  }
  item.appendChild(text);

  if (hit.fields.indicator || hit.fields.unit) {
    const triple = [hit.fields.indicator, hit.fields.value, hit.fields.unit]
      .filter(Boolean)
      .join(" · ");
    item.appendChild(el("div", "hit-triple", triple));
  }

  if (hit.entities.length) {
    const badges = el("div", "hit-entities");
    for (const entity of hit.entities) {
      badges.appendChild(el("span", `badge badge-${entity.kind.toLowerCase()}`, `${entity.kind}: ${entity.text}`));
    }
    item.appendChild(badges);
  }
  return item;
}

export function renderHits(state: ConsoleViewState): HTMLElement {
  const container = el("section", "hits");
  if (state.searchedQuery) {
    container.appendChild(
      el("div", "hits-summary", `top raw score ${state.topRawScore.toFixed(4)} · ${state.hits.length} hits`),
    );
  }
  const list = el("ul", "hit-list");
  for (const hit of state.hits) list.appendChild(renderHit(hit));
  container.appendChild(list);
  return container;
}

export function renderLedger(records: IndicatorRecord[]): HTMLElement {
  const container = el("section", "ledger");
  for (const record of records) {
    const entry = el("div", "ledger-record");
    entry.appendChild(
      el("h3", "ledger-id", `${record.indicator_id} — ${record.redefinition_count} redefinitions`),
    );
    const steps = el("ol", "ledger-steps");
    for (const step of record.steps) {
      const parts = [step.query.indicator_terms.join(" ")];
      if (step.query.keywords.length) parts.push(`+ ${step.query.keywords.join(" ")}`);
      if (step.query.source_filter) parts.push(`@ ${step.query.source_filter}`);
      parts.push(`score ${step.top_raw_score.toFixed(2)}`);
      parts.push(step.result_achieved ? "achieved" : "not achieved");
      steps.appendChild(el("li", step.result_achieved ? "step achieved" : "step", parts.join(" · ")));
    }
    entry.appendChild(steps);
    container.appendChild(entry);
  }
  return container;
}

const REPORT_COLUMNS = [
  "S.No", "Indicator", "Query", "Data source", "Source Type", "Added Keywords",
  "Suitability", "Adaptability", "Relevance score", "Result achieved", "Redefinitions",
];

const STATUS_LABEL: Record<string, string> = {
  ACHIEVED: "Y",
  RELEVANT: "Relevant results",
  NOT_ACHIEVED: "N",
};

export function renderReport(rows: ReportViewRow[], report: Report | null): HTMLElement {
  const container = el("section", "report");
  if (!report || rows.length === 0) {
    container.appendChild(el("p", "report-empty", "No refinement steps recorded yet."));
    return container;
  }

  const table = el("table", "report-table");
  const head = el("tr");
  for (const column of REPORT_COLUMNS) head.appendChild(el("th", undefined, column));
  table.appendChild(head);
  for (const row of rows) {
    const tr = el("tr", `status-${row.status.toLowerCase()}`);
    const cells = [
      String(row.serial), row.indicator, row.query, row.source_id, row.source_type,
      row.keywords, row.suitability, row.adaptability, row.relevance_score.toFixed(2),
      STATUS_LABEL[row.status] ?? row.status,
      row.redefinitions === null ? "" : String(row.redefinitions),
    ];
    for (const cell of cells) tr.appendChild(el("td", undefined, cell));
    table.appendChild(tr);
  }
  container.appendChild(table);

  const totals = el("table", "report-totals");
  const totalsHead = el("tr");
  for (const column of ["Data Type", "Total Queries", "Results achieved", "Relevant results", "Results not achieved"]) {
    totalsHead.appendChild(el("th", undefined, column));
  }
  totals.appendChild(totalsHead);
  for (const bucket of ["HTML", "PDF", "Table", "Unknown", "Total"]) {
    const t = report.totals[bucket];
    if (!t) continue;
    const tr = el("tr", bucket === "Total" ? "totals-row" : undefined);
    for (const cell of [bucket, t.total, t.achieved, t.relevant, t.not_achieved]) {
      tr.appendChild(el("td", undefined, String(cell)));
    }
    totals.appendChild(tr);
  }
  container.appendChild(totals);
  return container;
}

export function renderError(state: ConsoleViewState, onRetry: () => void): HTMLElement | null {
  if (!state.error) return null;
  const banner = el("div", "banner banner-error");
  banner.appendChild(el("span", undefined, state.error));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}
