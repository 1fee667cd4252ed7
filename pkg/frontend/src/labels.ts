// Display strings shared by the header and the profile strip.

export function formatR(r: number): string {
  const rounded = Math.round(r * 1e6) / 1e6;
  return `${rounded}`;
}

/** Slider label; the family endpoints get their method names spelled out. */
export function rLabel(r: number): string {
  if (r === 0) {
    return "r = 0 (DPCoA metric)";
  }
  if (r === 1) {
    return "r = 1 (PCA)";
  }
  return `r = ${formatR(r)}`;
}

/** Axis caption carrying the share of variance, e.g. "axis 1 (42.3%)". */
export function axisLabel(axis: number, fractions: number[]): string {
  const frac = fractions[axis];
  if (frac === undefined) {
    return `axis ${axis + 1}`;
  }
  return `axis ${axis + 1} (${(100 * frac).toFixed(1)}%)`;
}
