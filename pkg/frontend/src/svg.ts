/** Deterministic SVG plot primitives (fixed size, fixed precision). */

export const WIDTH = 640;
export const HEIGHT = 420;
const MARGIN = { left: 62, right: 16, top: 34, bottom: 46 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

const fmt = (v: number): string => v.toFixed(2);

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(v: number): number {
    const span = this.d1 - this.d0;
    const t = span === 0 ? 0.5 : (v - this.d0) / span;
    return this.r0 + t * (this.r1 - this.r0);
  }
}

/** Round bounds outward to a tidy tick step (deterministic). */
export function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const raw = (hi - lo) / n;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return parseFloat(v.toPrecision(4)).toString();
}

export interface Series {
  xs: number[];
  ys: number[];
  color: string;
  label?: string;
  kind: "line" | "scatter" | "both";
  markerClass?: string;
}

export interface PlotOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  xRange?: [number, number];
  yRange?: [number, number];
  extra?: string;
}

function dataRange(series: Series[], pick: (s: Series) => number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const v of pick(s)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(lo < hi)) {
    lo = lo === Infinity ? 0 : lo - 1;
    hi = lo + 2;
  }
  return [lo, hi];
}

export function plot(series: Series[], opts: PlotOptions): string {
  const [xlo, xhi] = opts.xRange ?? pad(dataRange(series, (s) => s.xs));
  const [ylo, yhi] = opts.yRange ?? pad(dataRange(series, (s) => s.ys));
  const sx = new LinearScale(xlo, xhi, MARGIN.left, WIDTH - MARGIN.right);
  const sy = new LinearScale(ylo, yhi, HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [];
  parts.push(svgOpen());
  parts.push(frame(opts, sx, sy));
  let legendY = MARGIN.top + 6;
  for (const s of series) {
    if ((s.kind === "line" || s.kind === "both") && s.xs.length > 1) {
      const pts = s.xs.map((x, i) => `${fmt(sx.map(x))},${fmt(sy.map(s.ys[i]))}`);
      parts.push(
        `<polyline fill="none" stroke="${s.color}" stroke-width="1.5" points="${pts.join(" ")}"/>`,
      );
    }
    if (s.kind === "scatter" || s.kind === "both") {
      for (let i = 0; i < s.xs.length; i++) {
        const cls = s.markerClass ? ` class="${s.markerClass}"` : "";
        parts.push(
          `<circle${cls} cx="${fmt(sx.map(s.xs[i]))}" cy="${fmt(sy.map(s.ys[i]))}" r="3" fill="${s.color}"/>`,
        );
      }
    }
    if (s.label) {
      parts.push(
        `<rect x="${WIDTH - 170}" y="${legendY - 8}" width="10" height="10" fill="${s.color}"/>`,
        `<text x="${WIDTH - 155}" y="${legendY + 1}" font-size="11">${esc(s.label)}</text>`,
      );
      legendY += 16;
    }
  }
  if (opts.extra) parts.push(opts.extra);
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function pad([lo, hi]: [number, number]): [number, number] {
  const m = 0.05 * (hi - lo);
  return [lo - m, hi + m];
}

export function svgOpen(): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica,Arial,sans-serif">` +
    `\n<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`
  );
}

function frame(opts: PlotOptions, sx: LinearScale, sy: LinearScale): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">${esc(opts.title)}</text>`,
  );
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333"/>`,
  );
  for (const t of niceTicks(sx.d0, sx.d1)) {
    const px = fmt(sx.map(t));
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`,
      `<text x="${px}" y="${y0 + 17}" text-anchor="middle" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  for (const t of niceTicks(sy.d0, sy.d1)) {
    const py = fmt(sy.map(t));
    parts.push(
      `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
      `<text x="${x0 - 7}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12">${esc(opts.xLabel)}</text>`,
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(opts.yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function histogram(
  values: number[],
  bins: number,
  opts: PlotOptions,
): string {
  if (values.length === 0) {
    return emptyFigure(opts.title, "no data rows");
  }
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const w = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const b = Math.min(bins - 1, Math.floor((v - lo) / w));
    counts[b] += 1;
  }
  const sx = new LinearScale(lo, hi, MARGIN.left, WIDTH - MARGIN.right);
  const cmax = Math.max(...counts);
  const sy = new LinearScale(0, cmax * 1.05, HEIGHT - MARGIN.bottom, MARGIN.top);
  const bars: string[] = [];
  for (let b = 0; b < bins; b++) {
    const px = sx.map(lo + b * w);
    const pw = sx.map(lo + (b + 1) * w) - px;
    const py = sy.map(counts[b]);
    const ph = sy.map(0) - py;
    bars.push(
      `<rect x="${fmt(px)}" y="${fmt(py)}" width="${fmt(pw)}" height="${fmt(ph)}" fill="${PALETTE[0]}" stroke="white" stroke-width="0.5"/>`,
    );
  }
  return plot([], { ...opts, xRange: [lo, hi], yRange: [0, cmax * 1.05], extra: bars.join("\n") });
}

export function emptyFigure(title: string, note: string): string {
  return (
    svgOpen() +
    `\n<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">${esc(title)}</text>` +
    `\n<text x="${WIDTH / 2}" y="${HEIGHT / 2}" text-anchor="middle" font-size="12" fill="#777">${esc(note)}</text>` +
    "\n</svg>\n"
  );
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
