const REPLACEMENTS: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (c) => REPLACEMENTS[c] as string);
}

/** Clamp a 0..1 score to a CSS percentage width for bars. */
export function barWidth(score: number): string {
  const pct = Math.max(0, Math.min(100, score * 100));
  return `${pct}%`;
}
