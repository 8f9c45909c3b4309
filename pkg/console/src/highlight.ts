import type { HighlightKind, Hit } from "./types.js";

/** The service reports spans as byte offsets into the UTF-8 text; JS
 * strings index UTF-16 code units. Map one to the other exactly. */
export function byteSpanToCharRange(
  text: string,
  span: [number, number],
): [number, number] {
  const [startByte, endByte] = span;
  let byte = 0;
  let charStart = -1;
  let charEnd = -1;
  let i = 0;
  while (i < text.length) {
    if (byte === startByte && charStart < 0) charStart = i;
    if (byte === endByte && charEnd < 0) charEnd = i;
    const cp = text.codePointAt(i)!;
    byte += utf8Length(cp);
    i += cp > 0xffff ? 2 : 1;
  }
  if (byte === startByte && charStart < 0) charStart = text.length;
  if (byte === endByte && charEnd < 0) charEnd = text.length;
  if (charStart < 0 || charEnd < 0) {
    throw new RangeError(`byte span [${startByte}, ${endByte}) does not align with the text`);
  }
  return [charStart, charEnd];
}

function utf8Length(codePoint: number): number {
  if (codePoint < 0x80) return 1;
  if (codePoint < 0x800) return 2;
  if (codePoint < 0x10000) return 3;
  return 4;
}

export interface Segment {
  text: string;
  kind: HighlightKind | null;
}

/** Split the hit text into plain/highlighted segments, exactly as the
 * spans came back from the service. */
export function highlightSegments(hit: Hit): Segment[] {
  const text = hit.fields.text;
  const ranges: { start: number; end: number; kind: HighlightKind }[] = [];
  for (const kind of ["indicator", "value", "unit"] as HighlightKind[]) {
    const span = hit.highlights?.[kind];
    if (span) {
      const [start, end] = byteSpanToCharRange(text, span);
      if (end > start) ranges.push({ start, end, kind });
    }
  }
  ranges.sort((a, b) => a.start - b.start);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const r of ranges) {
    if (r.start < cursor) continue; // server spans never overlap; drop if they do
    if (r.start > cursor) segments.push({ text: text.slice(cursor, r.start), kind: null });
    segments.push({ text: text.slice(r.start, r.end), kind: r.kind });
    cursor = r.end;
  }
  if (cursor < text.length) segments.push({ text: text.slice(cursor), kind: null });
  return segments;
}
