// Minimal SVG path builders: pure functions from numeric series to path
// strings, testable without a DOM.

export interface Extent {
  min: number;
  max: number;
}

export function extent(values: number[], pad = 0.05): Extent {
  if (values.length === 0) return { min: 0, max: 1 };
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

export function scale(domain: Extent, rangeLo: number, rangeHi: number) {
  const span = domain.max - domain.min || 1;
  return (v: number) => rangeLo + ((v - domain.min) / span) * (rangeHi - rangeLo);
}

export function linePath(
  xs: number[],
  ys: number[],
  sx: (v: number) => number,
  sy: (v: number) => number,
): string {
  if (xs.length === 0) return "";
  const parts = xs.map((x, i) => {
    const cmd = i === 0 ? "M" : "L";
    return `${cmd}${sx(x).toFixed(2)},${sy(ys[i]).toFixed(2)}`;
  });
  return parts.join(" ");
}

/** Closed band between an upper and a lower series (same x grid). */
export function bandPath(
  xs: number[],
  upper: number[],
  lower: number[],
  sx: (v: number) => number,
  sy: (v: number) => number,
): string {
  if (xs.length === 0) return "";
  const up = linePath(xs, upper, sx, sy);
  const backXs = [...xs].reverse();
  const backYs = [...lower].reverse();
  const back = backXs
    .map((x, i) => `L${sx(x).toFixed(2)},${sy(backYs[i]).toFixed(2)}`)
    .join(" ");
  return `${up} ${back} Z`;
}

export function horizontalRule(
  y: number,
  sx: (v: number) => number,
  sy: (v: number) => number,
  xDomain: Extent,
): string {
  return `M${sx(xDomain.min).toFixed(2)},${sy(y).toFixed(2)} L${sx(xDomain.max).toFixed(2)},${sy(y).toFixed(2)}`;
}
