/** Throughput-vs-threads figures: one facet per (structure, key range),
 * predicted series as lines, simulated/measured results as dots, update
 * ratio color-coded. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { readScenarios, SchemaError, type ScenarioRow } from "./csv.js";
import { dots, frame, legend, PALETTE, polyline, render } from "./svg.js";

export interface FacetResult {
  path: string;
  structure: string;
  R: number;
  series: number;
}

export function plotThroughput(inputs: string[], outDir: string): FacetResult[] {
  const rows = inputs.flatMap((path) => readScenarios(path));
  if (rows.length === 0) {
    throw new SchemaError("no scenario rows in the inputs");
  }
  if (!rows.some((r) => r.predicted_ops_s !== null)) {
    throw new SchemaError("need at least one predicted series to draw lines");
  }
  mkdirSync(outDir, { recursive: true });

  const facets = new Map<string, ScenarioRow[]>();
  for (const row of rows) {
    const key = `${row.structure}-r${row.R}`;
    if (!facets.has(key)) facets.set(key, []);
    facets.get(key)!.push(row);
  }

  const out: FacetResult[] = [];
  for (const [facetKey, facetRows] of [...facets.entries()].sort()) {
    const updates = [...new Set(facetRows.map((r) => r.update_pct))].sort((a, b) => a - b);
    const color = (u: number) => PALETTE[updates.indexOf(u) % PALETTE.length];
    const threads = facetRows.map((r) => r.threads);
    const values = facetRows.flatMap((r) =>
      [r.predicted_ops_s, r.sim_ops_s, r.measured_ops_s].filter(
        (v): v is number => v !== null));
    const f = frame(
      [Math.min(...threads, 1), Math.max(...threads)],
      [0, Math.max(...values)],
      `${facetRows[0].structure} R=${facetRows[0].R} (${facetRows[0].dist})`,
      "threads", "operations / s");

    for (const u of updates) {
      const series = facetRows
        .filter((r) => r.update_pct === u)
        .sort((a, b) => a.threads - b.threads);
      const predicted = series
        .filter((r) => r.predicted_ops_s !== null)
        .map((r) => [r.threads, r.predicted_ops_s!] as [number, number]);
      polyline(f, predicted, color(u));
      const sim = series
        .filter((r) => r.sim_ops_s !== null)
        .map((r) => [r.threads, r.sim_ops_s!] as [number, number]);
      dots(f, sim, color(u), "circle");
      const measured = series
        .filter((r) => r.measured_ops_s !== null)
        .map((r) => [r.threads, r.measured_ops_s!] as [number, number]);
      dots(f, measured, color(u), "square");
    }
    legend(f, updates.map((u) => [`${u}% updates`, color(u)] as [string, string]));

    const path = join(outDir, `throughput-${facetKey}.svg`);
    writeFileSync(path, render(f));
    out.push({ path, structure: facetRows[0].structure, R: facetRows[0].R,
               series: updates.length });
  }
  return out;
}
