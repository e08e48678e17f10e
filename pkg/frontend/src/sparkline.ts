/**
 * SVG path building for the per-detector sigma sparklines.  Pure string
 * geometry so it can be unit-tested without a DOM.
 */

import { type SigmaPoint } from "./store.js";

export interface SparklineGeometry {
  width: number;
  height: number;
  maxRound: number;
  maxSigma: number;
}

/**
 * Polyline through the sampled (round, sigma) points, x spread over the
 * round axis and y growing upward with sigma.  Returns "" when there is
 * nothing to draw yet.
 */
export function sparklinePath(
  points: SigmaPoint[],
  geometry: SparklineGeometry,
): string {
  if (points.length === 0) return "";
  const { width, height, maxRound, maxSigma } = geometry;
  const spanX = Math.max(maxRound, 1);
  const spanY = Math.max(maxSigma, 1);
  const parts: string[] = [];
  points.forEach((point, index) => {
    const x = ((point.round / spanX) * width).toFixed(1);
    const y = (height - (point.sigma / spanY) * height).toFixed(1);
    parts.push(`${index === 0 ? "M" : "L"}${x},${y}`);
  });
  return parts.join(" ");
}

/** Shared y-scale for a set of series so the lines compare visually. */
export function sigmaCeiling(series: SigmaPoint[][], threshold: number): number {
  let top = threshold;
  for (const points of series) {
    for (const point of points) top = Math.max(top, point.sigma);
  }
  return top;
}
