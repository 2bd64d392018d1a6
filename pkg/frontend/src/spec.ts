/** Figure descriptions and their CSV column requirements. */

export type FigureKind =
  | "learning-curve"
  | "uncertainty-band"
  | "rollout-length"
  | "correlation";

export interface FigureSpec {
  /** Input CSVs; `*`/`?` wildcards allowed in the filename segment. */
  glob: string;
  kind: FigureKind;
  /** Output image path (SVG). */
  out: string;
  /** Moving-average window over logged points; 1 = no smoothing. */
  smoothing?: number;
  title?: string;
}

export const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  "learning-curve": ["step", "avg_return"],
  "rollout-length": ["step", "expected_rollout_len"],
  correlation: ["step", "r_learned", "r_ensemble", "r_combined"],
  "uncertainty-band": ["x", "y_true", "mean", "std"],
};

const KINDS = Object.keys(REQUIRED_COLUMNS) as FigureKind[];

export function validateSpec(raw: Partial<FigureSpec>): FigureSpec {
  if (!raw.glob) throw new Error("figure spec needs a csv glob");
  if (!raw.out) throw new Error("figure spec needs an output path");
  if (!raw.kind || !KINDS.includes(raw.kind)) {
    throw new Error(`figure kind must be one of ${KINDS.join(", ")}`);
  }
  const smoothing = raw.smoothing ?? 1;
  if (!Number.isInteger(smoothing) || smoothing < 1) {
    throw new Error("smoothing window must be a positive integer");
  }
  return { glob: raw.glob, kind: raw.kind, out: raw.out, smoothing, title: raw.title };
}
