/** Minimal helpers for building markup strings. */

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function el(
  tag: string,
  attrs: Record<string, string | number | undefined>,
  children = "",
): string {
  const parts = Object.entries(attrs)
    .filter(([, value]) => value !== undefined)
    .map(([key, value]) => `${key}="${escapeHtml(String(value))}"`);
  const attrText = parts.length ? " " + parts.join(" ") : "";
  return `<${tag}${attrText}>${children}</${tag}>`;
}

export function round(value: number, digits = 2): number {
  const scale = 10 ** digits;
  return Math.round(value * scale) / scale;
}
