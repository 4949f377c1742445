/**
 * Reading and grouping of sweep CSVs.
 *
 * The CSV is the only interface to the simulation harness. This module never
 * recomputes statistics: it plots exactly the mean/stderr values found in the
 * file.
 */

import Papa from "papaparse";

export const METRICS: Record<string, { mean: string; stderr: string; label: string }> = {
  poe: { mean: "poe_mean", stderr: "poe_stderr", label: "probability of error" },
  simple_regret: { mean: "sr_mean", stderr: "sr_stderr", label: "simple regret" },
};

export const GROUP_COLUMNS = ["algorithm", "allocation"];

export interface Point {
  budget: number;
  value: number;
  stderr: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export class SchemaError extends Error {}

export function requiredColumns(metric: string, groupBy: string[]): string[] {
  const m = METRICS[metric];
  if (m === undefined) {
    throw new SchemaError(
      `unknown metric ${JSON.stringify(metric)}; valid metrics: ${Object.keys(METRICS).join(", ")}`,
    );
  }
  for (const column of groupBy) {
    if (!GROUP_COLUMNS.includes(column)) {
      throw new SchemaError(
        `unknown group column ${JSON.stringify(column)}; valid columns: ${GROUP_COLUMNS.join(", ")}`,
      );
    }
  }
  return ["budget", ...groupBy, m.mean, m.stderr];
}

export function parseRows(csvText: string): { columns: string[]; rows: Record<string, string>[] } {
  const parsed = Papa.parse<Record<string, string>>(csvText.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new SchemaError("CSV has no header row");
  }
  return { columns, rows: parsed.data };
}

/** One series per distinct combination of the group columns, budget-sorted. */
export function groupSeries(
  csvText: string,
  metric: string,
  groupBy: string[],
): Series[] {
  const needed = requiredColumns(metric, groupBy);
  const { columns, rows } = parseRows(csvText);
  for (const column of needed) {
    if (!columns.includes(column)) {
      throw new SchemaError(`CSV is missing required column ${JSON.stringify(column)}`);
    }
  }
  const m = METRICS[metric];
  const byKey = new Map<string, Point[]>();
  for (const row of rows) {
    const label = groupBy
      .map((c) => row[c])
      .filter((v) => v !== "" && v !== undefined)
      .join(" / ");
    const point = {
      budget: Number(row.budget),
      value: Number(row[m.mean]),
      stderr: Number(row[m.stderr]),
    };
    if (!Number.isFinite(point.budget) || !Number.isFinite(point.value)) {
      continue; // e.g. simple-regret columns left blank for a PoE-only sweep
    }
    const points = byKey.get(label);
    if (points === undefined) {
      byKey.set(label, [point]);
    } else {
      points.push(point);
    }
  }
  return [...byKey.entries()]
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([label, points]) => ({
      label,
      points: points.sort((p, q) => p.budget - q.budget),
    }));
}
