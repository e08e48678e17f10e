/**
 * Wire codec for the session service: one field:value pair per line.
 *
 * Persisted log records are the same fields flattened onto a single
 * space-separated line, so decodeFrame accepts both shapes.
 */

export type Frame = Record<string, string>;

const UNSAFE = /[:\n\r\t ]/;

function checkToken(text: string): string {
  if (text.length === 0 || UNSAFE.test(text)) {
    throw new Error(`field token not wire-safe: ${JSON.stringify(text)}`);
  }
  return text;
}

/** Encode fields as field:value lines, preserving insertion order. */
export function encodeFrame(fields: Frame): string {
  const lines: string[] = [];
  for (const [key, value] of Object.entries(fields)) {
    lines.push(`${checkToken(key)}:${checkToken(value)}`);
  }
  return lines.join("\n") + "\n";
}

/** Inverse of encodeFrame; splits on the first colon of each field. */
export function decodeFrame(text: string): Frame {
  const fields: Frame = {};
  for (const chunk of text.replace(/ /g, "\n").split(/\r?\n/)) {
    if (!chunk) continue;
    const sep = chunk.indexOf(":");
    if (sep < 0) {
      throw new Error(`malformed field ${JSON.stringify(chunk)}`);
    }
    fields[chunk.slice(0, sep)] = chunk.slice(sep + 1);
  }
  return fields;
}

/** A frame flattened to one space-separated log line. */
export function encodeRecord(fields: Frame): string {
  return encodeFrame(fields).replace(/\n$/, "").replace(/\n/g, " ") + "\n";
}
