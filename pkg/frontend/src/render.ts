/** Top-level render: spec -> SVG file. */

import { mkdirSync, writeFileSync } from "fs";
import { dirname } from "path";

import { expandGlob, readCurveCsv } from "./csv.js";
import { buildFigure } from "./figures.js";
import { FigureSpec, validateSpec } from "./spec.js";
import { computeLayout, renderSvg } from "./svg.js";

export function render(rawSpec: Partial<FigureSpec>): string {
  const spec = validateSpec(rawSpec);
  const paths = expandGlob(spec.glob);
  if (paths.length === 0) {
    throw new Error(`glob '${spec.glob}' matched no files`);
  }
  const tables = paths.map(readCurveCsv);
  const series = buildFigure(tables, spec.kind, spec.smoothing ?? 1);
  const svg = renderSvg(series, computeLayout(series), spec.title ?? "");
  mkdirSync(dirname(spec.out), { recursive: true });
  writeFileSync(spec.out, svg);
  return spec.out;
}
