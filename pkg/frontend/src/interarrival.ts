/** Inter-arrival overlay: empirical CDF dots per tracked key against an
 * exponential CDF with the same mean. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { readGaps, SchemaError } from "./csv.js";
import { dots, frame, legend, PALETTE, polyline, render } from "./svg.js";

const MIN_SAMPLES = 100;
const MAX_DOTS = 160;

export interface OverlayResult {
  path: string;
  keys: number[];
}

export function plotInterarrival(input: string, outDir: string): OverlayResult {
  const byKey = readGaps(input);
  if (byKey.size === 0) {
    throw new SchemaError(`${input}: no gap samples`);
  }
  for (const [key, gaps] of byKey) {
    if (gaps.length < MIN_SAMPLES) {
      throw new SchemaError(
        `key ${key}: ${gaps.length} samples < ${MIN_SAMPLES} required`);
    }
  }
  mkdirSync(outDir, { recursive: true });

  const keys = [...byKey.keys()].sort((a, b) => a - b);
  // Normalize each key's gaps by its own mean so every curve pair shares
  // one unit-mean axis and the exponential reference overlays them all.
  const xMax = 5;
  const f = frame([0, xMax], [0, 1], "inter-arrival of read events",
                  "gap / mean gap", "cumulative probability");
  const reference: [number, number][] = [];
  for (let i = 0; i <= 120; i++) {
    const x = (xMax * i) / 120;
    reference.push([x, 1 - Math.exp(-x)]);
  }
  keys.forEach((key, i) => {
    const color = PALETTE[i % PALETTE.length];
    const gaps = [...byKey.get(key)!].sort((a, b) => a - b);
    const mean = gaps.reduce((s, v) => s + v, 0) / gaps.length;
    const step = Math.max(1, Math.floor(gaps.length / MAX_DOTS));
    const points: [number, number][] = [];
    for (let j = 0; j < gaps.length; j += step) {
      points.push([gaps[j] / mean, (j + 1) / gaps.length]);
    }
    dots(f, points.filter(([x]) => x <= xMax), color);
  });
  polyline(f, reference, "#333333", true);
  legend(f, [
    ...keys.map((k, i) => [`key ${k}`, PALETTE[i % PALETTE.length]] as [string, string]),
    ["exponential", "#333333"],
  ]);

  const path = join(outDir, "interarrival.svg");
  writeFileSync(path, render(f));
  return { path, keys };
}
