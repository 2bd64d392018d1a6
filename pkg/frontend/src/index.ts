export { parseCurveCsv, readCurveCsv, column, expandGlob } from "./csv.js";
export type { CurveTable } from "./csv.js";
export { mean, sampleStd, standardError, movingAverage } from "./stats.js";
export {
  buildFigure,
  buildLearningCurve,
  buildRolloutLength,
  buildCorrelation,
  buildUncertaintyBand,
  seedAverage,
} from "./figures.js";
export type { BandSeries } from "./figures.js";
export { validateSpec, REQUIRED_COLUMNS } from "./spec.js";
export type { FigureSpec, FigureKind } from "./spec.js";
export { renderSvg, computeLayout, linearScale } from "./svg.js";
export type { Layout } from "./svg.js";
export { render } from "./render.js";
