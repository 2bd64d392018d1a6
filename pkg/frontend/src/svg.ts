/** Deterministic SVG rendering of band series (no timestamps, no randomness). */

import { BandSeries } from "./figures.js";

export interface Layout {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  xDomain: [number, number];
  yDomain: [number, number];
}

const PALETTE = ["#4c72b0", "#c44e52", "#55a868", "#8172b2", "#ccb974"];

export function linearScale(
  domain: [number, number],
  range: [number, number]
): (v: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function finite(values: number[]): number[] {
  return values.filter((v) => Number.isFinite(v));
}

export function computeLayout(series: BandSeries[], width = 720, height = 440): Layout {
  const xs = series.flatMap((s) => finite(s.x));
  const ys: number[] = [];
  for (const s of series) {
    for (let i = 0; i < s.mean.length; i++) {
      if (!Number.isFinite(s.mean[i])) continue;
      ys.push(s.mean[i]);
      const outer = s.bands[s.bands.length - 1];
      if (outer && Number.isFinite(outer[i])) {
        ys.push(s.mean[i] - outer[i], s.mean[i] + outer[i]);
      }
    }
  }
  const pad = (lo: number, hi: number): [number, number] => {
    if (lo === hi) return [lo - 1, hi + 1];
    const p = (hi - lo) * 0.05;
    return [lo - p, hi + p];
  };
  return {
    width,
    height,
    margin: { top: 28, right: 16, bottom: 40, left: 62 },
    xDomain: pad(Math.min(...xs), Math.max(...xs)),
    yDomain: pad(Math.min(...ys), Math.max(...ys)),
  };
}

function fmt(v: number): string {
  return Number(v.toFixed(3)).toString();
}

function pathFrom(points: [number, number][]): string {
  return points
    .map(([px, py], i) => `${i === 0 ? "M" : "L"}${fmt(px)},${fmt(py)}`)
    .join(" ");
}

function ticks(lo: number, hi: number, n = 5): number[] {
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(lo + ((hi - lo) * i) / n);
  return out;
}

/**
 * Render series as an SVG string.  Bands are drawn outermost first, so the
 * tighter interval sits visually on top of the wider one.
 */
export function renderSvg(series: BandSeries[], layout: Layout, title = ""): string {
  const { width, height, margin } = layout;
  const sx = linearScale(layout.xDomain, [margin.left, width - margin.right]);
  const sy = linearScale(layout.yDomain, [height - margin.bottom, margin.top]);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
      `width="${width}" height="${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (title) {
    parts.push(
      `<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">${title}</text>`
    );
  }

  // axes and ticks
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  parts.push(`<g stroke="#444" fill="none">`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}"/>`);
  parts.push(`</g>`);
  parts.push(`<g fill="#444" text-anchor="middle">`);
  for (const t of ticks(layout.xDomain[0], layout.xDomain[1])) {
    parts.push(`<text x="${fmt(sx(t))}" y="${y0 + 18}">${fmt(t)}</text>`);
  }
  parts.push(`</g>`);
  parts.push(`<g fill="#444" text-anchor="end">`);
  for (const t of ticks(layout.yDomain[0], layout.yDomain[1])) {
    parts.push(`<text x="${x0 - 8}" y="${fmt(sy(t) + 4)}">${fmt(t)}</text>`);
  }
  parts.push(`</g>`);

  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    const points: [number, number, number][] = [];
    for (let i = 0; i < s.x.length; i++) {
      if (Number.isFinite(s.x[i]) && Number.isFinite(s.mean[i])) {
        points.push([s.x[i], s.mean[i], i]);
      }
    }
    // widest band first so narrower intervals overlay it
    const order = s.bands.map((_, bi) => bi).sort((a, b) => b - a);
    for (const bi of order) {
      const half = s.bands[bi];
      const upper: [number, number][] = [];
      const lower: [number, number][] = [];
      for (const [xv, yv, i] of points) {
        if (!Number.isFinite(half[i])) continue;
        upper.push([sx(xv), sy(yv + half[i])]);
        lower.push([sx(xv), sy(yv - half[i])]);
      }
      if (upper.length === 0) continue;
      const ring = [...upper, ...lower.reverse()]
        .map(([px, py]) => `${fmt(px)},${fmt(py)}`)
        .join(" ");
      const opacity = 0.38 - 0.14 * bi;
      parts.push(
        `<polygon class="band band-${bi}" points="${ring}" fill="${color}" ` +
          `fill-opacity="${fmt(Math.max(opacity, 0.08))}" stroke="none"/>`
      );
    }
    const line = pathFrom(points.map(([xv, yv]) => [sx(xv), sy(yv)]));
    const dash = s.reference ? ` stroke-dasharray="5,4"` : "";
    parts.push(
      `<path class="series" d="${line}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`
    );
    parts.push(
      `<text x="${x1 - 6}" y="${y1 + 16 + 16 * si}" text-anchor="end" fill="${color}">` +
        `${s.label}</text>`
    );
  });
  parts.push(`</svg>`);
  return parts.join("\n") + "\n";
}
