import { describe, expect, it } from "vitest";

import { byteSpanToCharRange, highlightSegments } from "../src/highlight.js";
import type { Hit } from "../src/types.js";

function hitWith(text: string, highlights: Hit["highlights"]): Hit {
  return {
    unit_id: "u",
    doc_id: "D1",
    source_type: "PDF_TEXT",
    fields: { text, indicator: "", value: "", unit: "", entities: [], source: "" },
    score: { raw: 1, normalized: 1 },
    entities: [],
    highlights,
  };
}

describe("byteSpanToCharRange", () => {
  it("is the identity on ASCII", () => {
    expect(byteSpanToCharRange("cotton exports", [7, 14])).toEqual([7, 14]);
  });

  it("accounts for multi-byte characters before the span", () => {
    // "Müller" has a 2-byte ü: byte offsets shift by one after it
    const text = "Müller grew 63%";
    const byteStart = Buffer.byteLength("Müller grew ", "utf-8");
    const byteEnd = byteStart + Buffer.byteLength("63%", "utf-8");
    expect(byteSpanToCharRange(text, [byteStart, byteEnd])).toEqual([12, 15]);
    expect(text.slice(12, 15)).toBe("63%");
  });

  it("handles astral code points (surrogate pairs)", () => {
    const text = "🌾 field 12 ha";
    const start = Buffer.byteLength("🌾 field ", "utf-8");
    const end = start + 2;
    const [cs, ce] = byteSpanToCharRange(text, [start, end]);
    expect(text.slice(cs, ce)).toBe("12");
  });

  it("rejects spans that split a character", () => {
    expect(() => byteSpanToCharRange("ü", [1, 2])).toThrow(RangeError);
  });
});

describe("highlightSegments", () => {
  it("reproduces the text exactly and marks the returned ranges", () => {
    const text = "Cotton stubble retention reached 63% in surveyed fields.";
    const hit = hitWith(text, {
      indicator: [0, 32],
      value: [33, 35],
      unit: [35, 36],
    });
    const segments = highlightSegments(hit);
    expect(segments.map((s) => s.text).join("")).toBe(text);
    expect(segments.filter((s) => s.kind === "indicator").map((s) => s.text)).toEqual([
      "Cotton stubble retention reached",
    ]);
    expect(segments.find((s) => s.kind === "value")?.text).toBe("63");
    expect(segments.find((s) => s.kind === "unit")?.text).toBe("%");
  });

  it("renders plain text when there are no highlights", () => {
    const hit = hitWith("No extraction here.", {});
    expect(highlightSegments(hit)).toEqual([{ text: "No extraction here.", kind: null }]);
  });
});
