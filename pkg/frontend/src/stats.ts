/** Small numeric helpers shared by the figure builders. */

export function mean(values: number[]): number {
  if (values.length === 0) return NaN;
  let total = 0;
  for (const v of values) total += v;
  return total / values.length;
}

/**
 * Sample standard deviation (n-1 denominator); 0 for a single value.
 */
export function sampleStd(values: number[]): number {
  const n = values.length;
  if (n < 2) return 0;
  const m = mean(values);
  let ss = 0;
  for (const v of values) ss += (v - m) ** 2;
  return Math.sqrt(ss / (n - 1));
}

/**
 * Standard error of the mean: sample std / sqrt(n).
 */
export function standardError(values: number[]): number {
  if (values.length === 0) return 0;
  return sampleStd(values) / Math.sqrt(values.length);
}

/**
 * Centered moving average with the given odd-or-even window; window 1 is a
 * no-op.  Edges shrink the window rather than padding.
 */
export function movingAverage(values: number[], window: number): number[] {
  if (window <= 1) return values.slice();
  const half = Math.floor(window / 2);
  return values.map((_, i) => {
    const lo = Math.max(0, i - half);
    const hi = Math.min(values.length - 1, i + half);
    return mean(values.slice(lo, hi + 1));
  });
}
