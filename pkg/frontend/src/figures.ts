/** Figure data builders: from parsed CSV tables to plottable series. */

import { CurveTable, column } from "./csv.js";
import { FigureKind, REQUIRED_COLUMNS } from "./spec.js";
import { mean, movingAverage, standardError } from "./stats.js";

export interface BandSeries {
  label: string;
  x: number[];
  mean: number[];
  /** Half-widths of nested shaded bands, innermost first. */
  bands: number[][];
  /** Render as a dashed reference line (no band). */
  reference?: boolean;
}

export function checkColumns(tables: CurveTable[], kind: FigureKind): void {
  for (const required of REQUIRED_COLUMNS[kind]) {
    for (const table of tables) {
      if (!table.columns.includes(required)) {
        throw new Error(`figure kind '${kind}' needs column '${required}'`);
      }
    }
  }
}

/**
 * Average one column across seed tables, pointwise, with a +/- 1
 * standard-error band.  Seeds that did not log a point are skipped at that
 * point; the x axis comes from the first table.
 */
export function seedAverage(
  tables: CurveTable[],
  columnName: string,
  label: string,
  smoothing = 1
): BandSeries {
  const x = column(tables[0], "step");
  const perSeed = tables.map((t) => column(t, columnName));
  for (const series of perSeed) {
    if (series.length !== x.length) {
      throw new Error("seed CSVs disagree on row count");
    }
  }
  const avg: number[] = [];
  const se: number[] = [];
  for (let i = 0; i < x.length; i++) {
    const present = perSeed.map((s) => s[i]).filter((v) => !Number.isNaN(v));
    avg.push(present.length ? mean(present) : NaN);
    se.push(present.length ? standardError(present) : NaN);
  }
  return {
    label,
    x,
    mean: movingAverage(avg, smoothing),
    bands: [movingAverage(se, smoothing)],
  };
}

export function buildLearningCurve(tables: CurveTable[], smoothing = 1): BandSeries[] {
  checkColumns(tables, "learning-curve");
  return [seedAverage(tables, "avg_return", "avg return", smoothing)];
}

export function buildRolloutLength(tables: CurveTable[], smoothing = 1): BandSeries[] {
  checkColumns(tables, "rollout-length");
  return [seedAverage(tables, "expected_rollout_len", "expected rollout length", smoothing)];
}

export function buildCorrelation(tables: CurveTable[], smoothing = 1): BandSeries[] {
  checkColumns(tables, "correlation");
  return [
    seedAverage(tables, "r_learned", "learned variance", smoothing),
    seedAverage(tables, "r_ensemble", "ensemble variance", smoothing),
    seedAverage(tables, "r_combined", "combined variance", smoothing),
  ];
}

/**
 * Regression fit: predicted mean with nested +/- 1 and +/- 2 std bands,
 * plus the true function as a dashed reference.
 */
export function buildUncertaintyBand(table: CurveTable): BandSeries[] {
  checkColumns([table], "uncertainty-band");
  const x = column(table, "x");
  const std = column(table, "std");
  return [
    {
      label: "prediction",
      x,
      mean: column(table, "mean"),
      bands: [std, std.map((s) => 2 * s)],
    },
    {
      label: "true function",
      x,
      mean: column(table, "y_true"),
      bands: [],
      reference: true,
    },
  ];
}

export function buildFigure(
  tables: CurveTable[],
  kind: FigureKind,
  smoothing = 1
): BandSeries[] {
  if (tables.length === 0) throw new Error("no input CSVs matched the glob");
  switch (kind) {
    case "learning-curve":
      return buildLearningCurve(tables, smoothing);
    case "rollout-length":
      return buildRolloutLength(tables, smoothing);
    case "correlation":
      return buildCorrelation(tables, smoothing);
    case "uncertainty-band":
      if (tables.length !== 1) {
        throw new Error("uncertainty-band takes exactly one CSV");
      }
      return buildUncertaintyBand(tables[0]);
  }
}
