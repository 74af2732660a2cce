/** Offset handling. The server counts Unicode scalar values on NFC text;
 * JS strings count UTF-16 code units. Selections are snapped outward to
 * grapheme-cluster boundaries (never splitting what the user sees as one
 * character), then converted to scalar offsets for the wire. */

const segmenter = new Intl.Segmenter(undefined, { granularity: "grapheme" });

export function graphemeBoundaries(text: string): number[] {
  const bounds = [0];
  for (const part of segmenter.segment(text)) {
    bounds.push(part.index + part.segment.length);
  }
  return bounds;
}

/** Snap a UTF-16 range outward to grapheme boundaries. */
export function snapRange(
  text: string,
  start16: number,
  end16: number
): [number, number] {
  const bounds = graphemeBoundaries(text);
  let lo = 0;
  let hi = text.length;
  for (const b of bounds) {
    if (b <= start16 && b > lo) lo = b;
  }
  for (let i = bounds.length - 1; i >= 0; i--) {
    if (bounds[i] >= end16 && bounds[i] < hi) hi = bounds[i];
  }
  if (hi < lo) hi = lo;
  return [lo, hi];
}

export function scalarLength(text: string): number {
  let n = 0;
  for (const _ of text) n++;
  return n;
}

/** UTF-16 offset -> scalar offset; the input must sit on a scalar boundary
 * (guaranteed after snapRange, since grapheme bounds are scalar bounds). */
export function utf16ToScalar(text: string, offset16: number): number {
  let scalar = 0;
  let i = 0;
  for (const ch of text) {
    if (i >= offset16) break;
    i += ch.length;
    scalar++;
  }
  return scalar;
}

export function scalarToUtf16(text: string, scalar: number): number {
  let i = 0;
  let count = 0;
  for (const ch of text) {
    if (count >= scalar) break;
    i += ch.length;
    count++;
  }
  return i;
}

/** The UTF-16 ranges of whitespace-separated tokens (for tests/drivers). */
export function tokenRanges16(text: string): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  const re = /\S+/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    out.push([m.index, m.index + m[0].length]);
  }
  return out;
}
