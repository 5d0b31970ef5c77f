/** Readers for the versioned lfperf CSV schemas. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const SCENARIO_SCHEMA = "# lfperf-scenario-csv-v1";
export const GAPS_SCHEMA = "# lfperf-gaps-csv-v1";

export class SchemaError extends Error {}

export interface ScenarioRow {
  scenario: string;
  structure: string;
  R: number;
  dist: string;
  update_pct: number;
  threads: number;
  layout: string;
  predicted_ops_s: number | null;
  sim_ops_s: number | null;
  measured_ops_s: number | null;
}

const SCENARIO_COLUMNS = [
  "scenario", "structure", "R", "dist", "update_pct", "threads", "layout",
  "predicted_ops_s", "sim_ops_s", "measured_ops_s",
];

function splitSchemaLine(path: string, expected: string): string {
  const text = readFileSync(path, "utf8");
  const newline = text.indexOf("\n");
  const header = newline < 0 ? text : text.slice(0, newline);
  if (header.trim() !== expected) {
    throw new SchemaError(
      `${path}: expected schema line ${JSON.stringify(expected)}, got ` +
      JSON.stringify(header.trim()));
  }
  return text.slice(newline + 1);
}

function parseRows(path: string, body: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(body.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`${path}:${(e.row ?? 0) + 2}: ${e.message}`);
  }
  return parsed.data;
}

function num(raw: string | undefined): number | null {
  if (raw === undefined || raw.trim() === "") return null;
  const value = Number(raw);
  if (Number.isNaN(value)) throw new SchemaError(`not a number: ${raw}`);
  return value;
}

export function readScenarios(path: string): ScenarioRow[] {
  const body = splitSchemaLine(path, SCENARIO_SCHEMA);
  const rows = parseRows(path, body);
  if (rows.length > 0) {
    for (const column of SCENARIO_COLUMNS) {
      if (!(column in rows[0])) {
        throw new SchemaError(`${path}: missing column ${column}`);
      }
    }
  }
  return rows.map((row) => ({
    scenario: row.scenario,
    structure: row.structure,
    R: Number(row.R),
    dist: row.dist,
    update_pct: Number(row.update_pct),
    threads: Number(row.threads),
    layout: row.layout,
    predicted_ops_s: num(row.predicted_ops_s),
    sim_ops_s: num(row.sim_ops_s),
    measured_ops_s: num(row.measured_ops_s),
  }));
}

export function readGaps(path: string): Map<number, number[]> {
  const body = splitSchemaLine(path, GAPS_SCHEMA);
  const rows = parseRows(path, body);
  const out = new Map<number, number[]>();
  for (const row of rows) {
    if (!("key" in row) || !("gap_cycles" in row)) {
      throw new SchemaError(`${path}: missing column key/gap_cycles`);
    }
    const key = Number(row.key);
    const gap = Number(row.gap_cycles);
    if (!out.has(key)) out.set(key, []);
    out.get(key)!.push(gap);
  }
  return out;
}
