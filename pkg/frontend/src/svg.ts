/** Tiny deterministic SVG scene builder (no DOM). */

import { scaleLinear, type ScaleLinear } from "d3-scale";

export const WIDTH = 640;
export const HEIGHT = 440;
export const MARGIN = { top: 36, right: 24, bottom: 52, left: 76 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf",
];

const fmt = (v: number) => (Number.isInteger(v) ? String(v) : v.toPrecision(4));

export interface Frame {
  x: ScaleLinear<number, number>;
  y: ScaleLinear<number, number>;
  parts: string[];
}

export function frame(
  xDomain: [number, number], yDomain: [number, number],
  title: string, xLabel: string, yLabel: string,
): Frame {
  const x = scaleLinear().domain(xDomain).nice()
    .range([MARGIN.left, WIDTH - MARGIN.right]);
  const y = scaleLinear().domain(yDomain).nice()
    .range([HEIGHT - MARGIN.bottom, MARGIN.top]);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">` +
    `${escapeText(title)}</text>`);
  // axes
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${WIDTH - MARGIN.right}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}" stroke="black"/>`);
  for (const tick of x.ticks(6)) {
    const px = x(tick);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(`<text x="${px}" y="${y0 + 18}" text-anchor="middle">${fmt(tick)}</text>`);
  }
  for (const tick of y.ticks(6)) {
    const py = y(tick);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(`<text x="${x0 - 8}" y="${py + 4}" text-anchor="end">${fmt(tick)}</text>`);
  }
  parts.push(
    `<text x="${(x0 + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 12}" ` +
    `text-anchor="middle">${escapeText(xLabel)}</text>`);
  parts.push(
    `<text x="18" y="${(MARGIN.top + y0) / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 18 ${(MARGIN.top + y0) / 2})">${escapeText(yLabel)}</text>`);
  return { x, y, parts };
}

export function polyline(f: Frame, points: [number, number][], color: string,
                         dashed = false): void {
  if (points.length === 0) return;
  const path = points
    .map(([px, py], i) => `${i === 0 ? "M" : "L"}${f.x(px).toFixed(2)},${f.y(py).toFixed(2)}`)
    .join("");
  const dash = dashed ? ` stroke-dasharray="6 4"` : "";
  f.parts.push(`<path d="${path}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`);
}

export function dots(f: Frame, points: [number, number][], color: string,
                     shape: "circle" | "square" = "circle"): void {
  for (const [px, py] of points) {
    const cx = f.x(px).toFixed(2);
    const cy = f.y(py).toFixed(2);
    if (shape === "circle") {
      f.parts.push(`<circle cx="${cx}" cy="${cy}" r="3.5" fill="${color}"/>`);
    } else {
      f.parts.push(
        `<rect x="${(Number(cx) - 3).toFixed(2)}" y="${(Number(cy) - 3).toFixed(2)}" ` +
        `width="6" height="6" fill="${color}"/>`);
    }
  }
}

export function legend(f: Frame, entries: [string, string][]): void {
  entries.forEach(([label, color], i) => {
    const lx = WIDTH - MARGIN.right - 150;
    const ly = MARGIN.top + 8 + i * 16;
    f.parts.push(`<rect x="${lx}" y="${ly - 8}" width="10" height="10" fill="${color}"/>`);
    f.parts.push(`<text x="${lx + 16}" y="${ly + 1}">${escapeText(label)}</text>`);
  });
}

export function render(f: Frame): string {
  return f.parts.join("\n") + "\n</svg>\n";
}

function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
