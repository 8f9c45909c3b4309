/**
 * Scripted round-trip against the real backend: builds a fixture
 * repository with the CLI, serves the HTTP API, and drives the console's
 * own store through the three-stage refinement, exactly as the UI would.
 */
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleStore } from "../src/state.js";

const PYTHON = process.env.FACTMINE_PY ?? "python3";
const PKG_ROOT = fileURLToPath(new URL("../..", import.meta.url));
const FIXTURES = join(PKG_ROOT, "tests", "fixtures");
const PORT = 18650 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;

let workdir: string;
let server: ChildProcess | null = null;

function cli(repo: string, ...args: string[]): void {
  execFileSync(PYTHON, ["-m", "factmine", "--repo", repo, ...args], {
    cwd: PKG_ROOT,
    env: { ...process.env, FACTMINE_RETRIEVED_AT: "2016-09-01T00:00:00+00:00" },
    stdio: "pipe",
  });
}

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/v1/indicators`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("backend did not come up in time");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  const repo = join(workdir, "repo");
  cli(repo, "ingest", "--type", "pdf-text", "--uri", "https://outlook.example.org/commodities.pdf",
    "--id", "D3", "--title", "Commodities Outlook", join(FIXTURES, "d3_outlook.pdftext.jsonl"));
  cli(repo, "ingest", "--type", "pdf-text", "--uri", "https://members.example.org/practices.pdf",
    "--id", "D4", "--title", "Management Practices Report", "--access", "subscription",
    join(FIXTURES, "d4_practices.pdftext.jsonl"));
  cli(repo, "ingest", "--type", "html", "--uri", "https://cotton.example.org/overview",
    "--id", "D1", "--title", "Cotton industry overview", join(FIXTURES, "d1_overview.html"));
  cli(repo, "extract");

  server = spawn(PYTHON, ["-m", "factmine", "--repo", repo, "serve", "--port", String(PORT)], {
    cwd: PKG_ROOT,
    stdio: "ignore",
  });
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("three-stage refinement against the live service", () => {
  it("records the full flow and shows redefinition_count 2 in the report view", async () => {
    const api = new ApiClient(BASE);
    const store = new ConsoleStore(api);
    await store.loadSources();
    expect(store.getState().sources.map((s) => s.id).sort()).toEqual(["D1", "D3", "D4"]);

    // stage 1: simple query; the stubble distractor elsewhere keeps it unresolved
    store.setField("indicator", "Cotton stubble");
    await store.submit();
    const simpleTop = store.getState().topRawScore;
    expect(store.getState().hits.length).toBeGreaterThan(0);
    await store.recordStep(false);

    // stage 2: add the unit keyword
    store.setField("keywords", "%");
    await store.submit();
    expect(store.getState().topRawScore).toBeGreaterThan(simpleTop);
    await store.recordStep(false);

    // stage 3: restrict to the subscription source and mark achieved
    store.setField("source", "D4");
    await store.submit();
    expect(store.getState().hits.every((h) => h.doc_id === "D4")).toBe(true);
    const record = await store.recordStep(true);
    expect(record?.redefinition_count).toBe(2);

    await store.loadReport();
    const rows = store.reportRows();
    const stubble = rows.find((r) => r.indicator === "cotton-stubble");
    expect(stubble).toBeDefined();
    expect(stubble!.redefinitions).toBe(2);
    expect(stubble!.status).toBe("ACHIEVED");
    expect(stubble!.source_id).toBe("D4");
    expect(stubble!.keywords).toBe("%");
  });

  it("hit highlights round-trip through the store unchanged", async () => {
    const api = new ApiClient(BASE);
    const store = new ConsoleStore(api);
    store.setField("indicator", "Cotton stubble");
    store.setField("keywords", "%");
    store.setField("source", "D4");
    await store.submit();
    const top = store.getState().hits[0];
    expect(top.highlights.value).toBeDefined();
    const [s, e] = top.highlights.value!;
    const bytes = Buffer.from(top.fields.text, "utf-8");
    expect(bytes.subarray(s, e).toString("utf-8")).toBe("63");
  });

  it("CSV download matches the service CSV byte for byte", async () => {
    const api = new ApiClient(BASE);
    const viaClient = await api.reportCsv();
    const direct = await (await fetch(`${BASE}/v1/report?format=csv`)).text();
    expect(viaClient).toBe(direct);
    expect(viaClient.split("\n")[0]).toMatch(/^S\.No,Indicator,Query/);
  });
});
