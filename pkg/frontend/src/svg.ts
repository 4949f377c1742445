/**
 * Hand-built SVG error-bar line chart: x = budget, y = metric mean,
 * vertical bars = +-1 stderr. Deterministic function of its inputs.
 */

import { scaleLinear, scaleLog } from "d3-scale";
import type { Series } from "./csv.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 20, right: 24, bottom: 48, left: 64 };

// matplotlib's default cycle, which the paper's figures use
const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

function fmt(x: number): string {
  return Number(x.toPrecision(6)).toString();
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(series: Series[], yLabel: string, logY: boolean): string {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;

  const budgets = series.flatMap((s) => s.points.map((p) => p.budget));
  const lows = series.flatMap((s) => s.points.map((p) => p.value - p.stderr));
  const highs = series.flatMap((s) => s.points.map((p) => p.value + p.stderr));
  const x = scaleLinear()
    .domain(budgets.length ? [Math.min(...budgets), Math.max(...budgets)] : [0, 1])
    .range([0, innerW])
    .nice();
  const yMin = lows.length ? Math.min(...lows) : logY ? 0.001 : 0;
  const yMax = highs.length ? Math.max(...highs) : 1;
  const y = logY
    ? scaleLog().domain([Math.max(yMin, 1e-12), yMax]).range([innerH, 0]).nice()
    : scaleLinear().domain([Math.min(yMin, 0), yMax]).range([innerH, 0]).nice();

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `font-family="sans-serif" font-size="11">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<g transform="translate(${MARGIN.left},${MARGIN.top})">`,
  );

  // axes and grid
  parts.push(
    `<line x1="0" y1="${innerH}" x2="${innerW}" y2="${innerH}" stroke="black"/>`,
    `<line x1="0" y1="0" x2="0" y2="${innerH}" stroke="black"/>`,
  );
  for (const tick of x.ticks(6)) {
    const px = fmt(x(tick));
    parts.push(
      `<line x1="${px}" y1="${innerH}" x2="${px}" y2="${innerH + 5}" stroke="black"/>`,
      `<text x="${px}" y="${innerH + 18}" text-anchor="middle">${fmt(tick)}</text>`,
    );
  }
  for (const tick of y.ticks(logY ? 5 : 6)) {
    const py = fmt(y(tick));
    parts.push(
      `<line x1="-5" y1="${py}" x2="0" y2="${py}" stroke="black"/>`,
      `<line x1="0" y1="${py}" x2="${innerW}" y2="${py}" stroke="#ddd"/>`,
      `<text x="-8" y="${py}" dy="0.32em" text-anchor="end">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<text x="${innerW / 2}" y="${innerH + 36}" text-anchor="middle">budget n</text>`,
    `<text transform="translate(${-46},${innerH / 2}) rotate(-90)" ` +
      `text-anchor="middle">${esc(yLabel)}</text>`,
  );

  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = s.points.map((p) => ({
      px: x(p.budget),
      py: y(p.value),
      lo: y(logY ? Math.max(p.value - p.stderr, 1e-12) : p.value - p.stderr),
      hi: y(p.value + p.stderr),
    }));
    const line = pts.map((p) => `${fmt(p.px)},${fmt(p.py)}`).join(" ");
    parts.push(`<g class="series" stroke="${color}" fill="${color}">`);
    parts.push(`<polyline points="${line}" fill="none" stroke-width="1.5"/>`);
    for (const p of pts) {
      parts.push(
        `<line class="errorbar" x1="${fmt(p.px)}" y1="${fmt(p.lo)}" ` +
          `x2="${fmt(p.px)}" y2="${fmt(p.hi)}" stroke-width="1"/>`,
        `<line x1="${fmt(p.px - 3)}" y1="${fmt(p.hi)}" x2="${fmt(p.px + 3)}" y2="${fmt(p.hi)}"/>`,
        `<line x1="${fmt(p.px - 3)}" y1="${fmt(p.lo)}" x2="${fmt(p.px + 3)}" y2="${fmt(p.lo)}"/>`,
        `<circle cx="${fmt(p.px)}" cy="${fmt(p.py)}" r="2.5" stroke="none"/>`,
      );
    }
    parts.push(`</g>`);
    parts.push(
      `<g class="legend">` +
        `<line x1="${innerW - 150}" y1="${14 + 16 * idx}" x2="${innerW - 130}" ` +
        `y2="${14 + 16 * idx}" stroke="${color}" stroke-width="1.5"/>` +
        `<text x="${innerW - 124}" y="${14 + 16 * idx}" dy="0.32em">${esc(s.label)}</text>` +
        `</g>`,
    );
  });

  parts.push(`</g></svg>`);
  return parts.join("\n") + "\n";
}
