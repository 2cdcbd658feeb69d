/** Turning break markup into a visual token stream.
 *
 *  "#" (phonetic pause) renders as a pause glyph after its word, "/"
 *  (sentence boundary) as a stop glyph. The word sequence shown always
 *  equals the utterance text word-for-word; a raw toggle shows the
 *  unmodified markup instead.
 */

export const PAUSE_GLYPH = "⏸";
export const BOUNDARY_GLYPH = "⏹";

export type Marker = "pause" | "boundary" | null;

export interface Token {
  word: string;
  marker: Marker;
}

export function tokenizeAnnotated(annotated: string): Token[] {
  const tokens: Token[] = [];
  for (const raw of annotated.split(/\s+/).filter((t) => t.length > 0)) {
    if (raw === "#" || raw === "/") {
      const last = tokens[tokens.length - 1];
      if (last) last.marker = raw === "#" ? "pause" : "boundary";
      continue;
    }
    tokens.push({ word: raw, marker: null });
  }
  return tokens;
}

export function wordsOf(tokens: Token[]): string[] {
  return tokens.map((t) => t.word);
}

export function renderTokensHtml(tokens: Token[]): string {
  const parts: string[] = [];
  for (const token of tokens) {
    parts.push(`<span class="word">${escapeHtml(token.word)}</span>`);
    if (token.marker === "pause") {
      parts.push(`<span class="marker pause" title="pause">${PAUSE_GLYPH}</span>`);
    } else if (token.marker === "boundary") {
      parts.push(
        `<span class="marker boundary" title="sentence boundary">${BOUNDARY_GLYPH}</span>`,
      );
    }
  }
  return parts.join(" ");
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
