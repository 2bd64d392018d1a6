/** Parsing for the experiment CSVs: `# key=value` metadata lines, a header
 * row, then numeric rows where empty cells mean "metric not logged". */

import { readFileSync, readdirSync } from "fs";
import { basename, dirname, join } from "path";

export interface CurveTable {
  metadata: Record<string, string>;
  columns: string[];
  /** rows[i][j] is null when the cell was empty. */
  rows: (number | null)[][];
}

export function parseCurveCsv(text: string): CurveTable {
  const metadata: Record<string, string> = {};
  const dataLines: string[] = [];
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (line.length === 0) continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const eq = body.indexOf("=");
      if (eq > 0) metadata[body.slice(0, eq).trim()] = body.slice(eq + 1);
      continue;
    }
    dataLines.push(line);
  }
  if (dataLines.length === 0) {
    throw new Error("CSV has no header row");
  }
  const columns = dataLines[0].split(",").map((c) => c.trim());
  const rows = dataLines.slice(1).map((line) => {
    return line.split(",").map((cell) => {
      const trimmed = cell.trim();
      if (trimmed === "") return null;
      const value = Number(trimmed);
      if (Number.isNaN(value)) throw new Error(`non-numeric cell ${trimmed}`);
      return value;
    });
  });
  return { metadata, columns, rows };
}

export function readCurveCsv(path: string): CurveTable {
  return parseCurveCsv(readFileSync(path, "utf8"));
}

/** Column values as numbers; missing cells become NaN. */
export function column(table: CurveTable, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column '${name}' (have: ${table.columns.join(", ")})`);
  }
  return table.rows.map((row) => (row[idx] === null ? NaN : (row[idx] as number)));
}

/**
 * Expand a glob limited to `*` and `?` wildcards in the final path segment
 * (e.g. `runs/control_*_seed*.csv`).  Results are sorted for determinism.
 */
export function expandGlob(pattern: string): string[] {
  const dir = dirname(pattern);
  const base = basename(pattern);
  if (!base.includes("*") && !base.includes("?")) {
    return [pattern];
  }
  const regex = new RegExp(
    "^" +
      base
        .replace(/[.+^${}()|[\]\\]/g, "\\$&")
        .replace(/\*/g, ".*")
        .replace(/\?/g, ".") +
      "$"
  );
  let entries: string[];
  try {
    entries = readdirSync(dir);
  } catch {
    return [];
  }
  return entries
    .filter((name) => regex.test(name))
    .sort()
    .map((name) => join(dir, name));
}
