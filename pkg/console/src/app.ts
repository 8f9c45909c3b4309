import { ApiClient } from "./api.js";
import { downloadCsv } from "./csv.js";
import { ConsoleStore } from "./state.js";
import { renderError, renderHits, renderLedger, renderReport } from "./view.js";

/** Wire the store to the static page; the API base URL comes from
 * ?api=... or defaults to same-origin. */
export function bootstrap(root: HTMLElement): ConsoleStore {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("api") ?? "");
  const store = new ConsoleStore(api);

  root.innerHTML = `
    <header><h1>factmine console</h1></header>
    <div id="banner"></div>
    <form id="query-form" class="query-panel">
      <label>Indicator
        <input id="q-indicator" placeholder="e.g. Cotton stubble" autocomplete="off" />
      </label>
      <label>Keywords <span class="stage">(refinement stage 2, usually the unit)</span>
        <input id="q-keywords" placeholder="e.g. %" autocomplete="off" />
      </label>
      <label>Source <span class="stage">(refinement stage 3)</span>
        <select id="q-source"><option value="">any source</option></select>
      </label>
      <label>Ledger id
        <input id="q-indicator-id" placeholder="defaults to the indicator" autocomplete="off" />
      </label>
      <div class="actions">
        <button type="submit" id="btn-search">Search</button>
        <button type="button" id="btn-achieved">Record step: achieved</button>
        <button type="button" id="btn-not-achieved">Record step: not achieved</button>
      </div>
    </form>
    <main>
      <div id="hits"></div>
      <section>
        <h2>Refinement ledger</h2>
        <div id="ledger"></div>
      </section>
      <section>
        <h2>Report</h2>
        <button type="button" id="btn-report">Refresh report</button>
        <button type="button" id="btn-csv">Download CSV</button>
        <div id="report"></div>
      </section>
    </main>
  `;

  const field = (id: string) => root.querySelector<HTMLInputElement>(`#${id}`)!;
  const indicator = field("q-indicator");
  const keywords = field("q-keywords");
  const indicatorId = field("q-indicator-id");
  const source = root.querySelector<HTMLSelectElement>("#q-source")!;

  indicator.addEventListener("input", () => store.setField("indicator", indicator.value));
  keywords.addEventListener("input", () => store.setField("keywords", keywords.value));
  indicatorId.addEventListener("input", () => store.setField("indicatorId", indicatorId.value));
  source.addEventListener("change", () => store.setField("source", source.value));

  root.querySelector("#query-form")!.addEventListener("submit", (event) => {
    event.preventDefault();
    void store.submit();
  });
  root.querySelector("#btn-achieved")!.addEventListener("click", () => void store.recordStep(true));
  root.querySelector("#btn-not-achieved")!.addEventListener("click", () => void store.recordStep(false));
  root.querySelector("#btn-report")!.addEventListener("click", () => void store.loadReport());
  root.querySelector("#btn-csv")!.addEventListener("click", async () => {
    downloadCsv("indicator-report.csv", await api.reportCsv());
  });

  store.subscribe((state) => {
    const banner = root.querySelector("#banner")!;
    banner.innerHTML = "";
    const error = renderError(state, () => void store.submit());
    if (error) banner.appendChild(error);
    if (state.notice) {
      const note = document.createElement("div");
      note.className = "banner banner-notice";
      note.textContent = state.notice;
      banner.appendChild(note);
    }

    const sourceOptions = ['<option value="">any source</option>']
      .concat(state.sources.map((s) => `<option value="${s.id}">${s.id} — ${s.title}</option>`))
      .join("");
    if (source.innerHTML !== sourceOptions) {
      const selected = state.source;
      source.innerHTML = sourceOptions;
      source.value = selected;
    }

    const hits = root.querySelector("#hits")!;
    hits.innerHTML = "";
    hits.appendChild(renderHits(state));

    const ledger = root.querySelector("#ledger")!;
    ledger.innerHTML = "";
    ledger.appendChild(renderLedger(state.ledger));

    const report = root.querySelector("#report")!;
    report.innerHTML = "";
    report.appendChild(renderReport(store.reportRows(), state.report));
  });

  void store.loadSources();
  void store.loadLedger();
  void store.loadReport();
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap(document.getElementById("app")!);
}
