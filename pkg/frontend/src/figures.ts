/** Figure renderers for hardshift run outputs. */

import { column, parseCsv, requireColumns, Table } from "./csv.js";
import { Configuration, RunSummary, TraceStep } from "./formats.js";
import {
  emptyFigure, esc, histogram, LinearScale, PALETTE, plot, Series, svgOpen,
  WIDTH, HEIGHT,
} from "./svg.js";

/** Shift-profile evolution: envelope cross sections with trace minima. */
export function profileEvolution(profile: Table, trace: TraceStep[]): string {
  requireColumns(profile, ["step", "s", "value"]);
  const steps = column(profile, "step");
  const ss = column(profile, "s");
  const vals = column(profile, "value");
  const bySteps = new Map<number, { xs: number[]; ys: number[] }>();
  for (let i = 0; i < steps.length; i++) {
    const k = steps[i];
    if (!bySteps.has(k)) bySteps.set(k, { xs: [], ys: [] });
    bySteps.get(k)!.xs.push(ss[i]);
    bySteps.get(k)!.ys.push(vals[i]);
  }
  const series: Series[] = [];
  let ci = 0;
  for (const k of [...bySteps.keys()].sort((a, b) => a - b)) {
    const { xs, ys } = bySteps.get(k)!;
    series.push({
      xs, ys, kind: "line",
      color: PALETTE[ci % PALETTE.length],
      label: `after step ${k}`,
    });
    ci += 1;
  }
  series.push({
    xs: trace.map((t) => t.P[0]),
    ys: trace.map((t) => t.tau),
    kind: "scatter",
    color: "#000000",
    label: "selected minima",
    markerClass: "min-marker",
  });
  return plot(series, {
    title: "Shift profile evolution (cross section y = 0)",
    xLabel: "x",
    yLabel: "shift amount",
  });
}

/** The cone-shaped slow-down constraint of one shifted particle. */
export function slowdownShape(summary: RunSummary): string {
  const { n, z, delta } = summary.spec;
  const eps = Math.min(1 / (48 * z), 0.25);
  const target = delta * eps * Math.sqrt(Math.log(n));
  const t = 0.4 * target;
  const h = 0.8 * delta * eps;
  const xs: number[] = [];
  const ys: number[] = [];
  for (const [x, y] of [
    [-1 - eps, t + h], [-1, t], [1, t], [1 + eps, t + h],
  ]) {
    xs.push(x);
    ys.push(y);
  }
  const walls: Series[] = [
    { xs: [-1 - eps, -1 - eps], ys: [t + h, t + h + 0.35 * target], kind: "line", color: "#aaaaaa" },
    { xs: [1 + eps, 1 + eps], ys: [t + h, t + h + 0.35 * target], kind: "line", color: "#aaaaaa" },
  ];
  const note =
    `<text x="${WIDTH - 24}" y="${HEIGHT - 54}" text-anchor="end" font-size="11" fill="#555">` +
    esc(`base ${t.toExponential(3)}, headroom ${h.toExponential(3)}, range 1+eps = ${(1 + eps).toFixed(4)}`) +
    "</text>";
  return plot(
    [
      { xs, ys, kind: "line", color: PALETTE[1], label: "constraint value" },
      ...walls,
    ],
    {
      title: "Slow-down constraint (radial section; unconstrained outside)",
      xLabel: "distance from the shifted particle",
      yLabel: "allowed shift",
      extra: note,
    },
  );
}

/** Before/after particle panels with unit-diameter disks. */
export function configPanels(before: Configuration, after: Configuration): string {
  const n = before.n;
  const lim = n + 2.5;
  const panelW = (WIDTH - 90) / 2;
  const panelH = HEIGHT - 90;
  const parts: string[] = [svgOpen()];
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">Configuration before and after the shift</text>`,
  );
  const panels: [Configuration, number, string][] = [
    [before, 30, "before"],
    [after, 60 + panelW, "after"],
  ];
  for (const [cfg, x0, label] of panels) {
    const sx = new LinearScale(-lim, lim, x0, x0 + panelW);
    const sy = new LinearScale(-lim, lim, 40 + panelH, 40);
    const r = Math.abs(sx.map(0.5) - sx.map(0));
    parts.push(
      `<rect x="${x0}" y="40" width="${panelW.toFixed(2)}" height="${panelH}" fill="none" stroke="#333"/>`,
    );
    // the box and the sqrt(n) core
    for (const [half, color] of [[n, "#888888"], [Math.sqrt(n), "#bbbbbb"]] as [number, string][]) {
      const px = sx.map(-half);
      const py = sy.map(half);
      const w = sx.map(half) - px;
      const h = sy.map(-half) - py;
      parts.push(
        `<rect x="${px.toFixed(2)}" y="${py.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="none" stroke="${color}" stroke-dasharray="4 3"/>`,
      );
    }
    for (const [bx, by] of cfg.boundary) {
      if (Math.abs(bx) > lim || Math.abs(by) > lim) continue;
      parts.push(
        `<circle cx="${sx.map(bx).toFixed(2)}" cy="${sy.map(by).toFixed(2)}" r="${r.toFixed(2)}" fill="#cccccc" stroke="#666"/>`,
      );
    }
    for (const [ix, iy] of cfg.interior) {
      parts.push(
        `<circle cx="${sx.map(ix).toFixed(2)}" cy="${sy.map(iy).toFixed(2)}" r="${r.toFixed(2)}" fill="${PALETTE[0]}" fill-opacity="0.55" stroke="${PALETTE[0]}"/>`,
      );
    }
    parts.push(
      `<text x="${(x0 + panelW / 2).toFixed(2)}" y="${HEIGHT - 24}" text-anchor="middle" font-size="12">${label}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

/** Histogram of per-sample cluster reach excess. */
export function clusterHistogram(clusters: Table): string {
  requireColumns(clusters, ["sample", "n_clusters", "largest_cluster", "max_reach_excess"]);
  const excess = column(clusters, "max_reach_excess");
  return histogram(excess, 24, {
    title: "Cluster reach excess per sample (good iff below 0)",
    xLabel: "max over particles of reach - max_norm - 3 ln n",
    yLabel: "samples",
  });
}

/** Histogram of log(phi phibar) from a verify/bounds table. */
export function logDensityHistogram(table: Table): string {
  requireColumns(table, ["log_phiphibar"]);
  const vals = column(table, "log_phiphibar");
  return histogram(vals, 24, {
    title: "log(phi phibar) across samples",
    xLabel: "log(phi phibar)",
    yLabel: "samples",
  });
}

/** Mean |log(phi phibar)| against delta^2 from a delta sweep. */
export function deltaScaling(sweep: Table): string {
  requireColumns(sweep, ["delta_sq", "mean_abs_log_phiphibar"]);
  const xs = column(sweep, "delta_sq");
  const ys = column(sweep, "mean_abs_log_phiphibar");
  const order = xs.map((_, i) => i).sort((a, b) => xs[a] - xs[b]);
  return plot(
    [{
      xs: order.map((i) => xs[i]),
      ys: order.map((i) => ys[i]),
      kind: "both",
      color: PALETTE[2],
      label: "measured",
    }],
    {
      title: "Density log-cost scales with the squared Lipschitz budget",
      xLabel: "delta^2",
      yLabel: "mean |log(phi phibar)|",
    },
  );
}

/** Tagged-particle displacement growth against sqrt(log n). */
export function displacementGrowth(sweep: Table): string {
  requireColumns(sweep, ["sqrt_log_n", "mean_square_displacement", "target_shift"]);
  const xs = column(sweep, "sqrt_log_n");
  const msd = column(sweep, "mean_square_displacement");
  const target = column(sweep, "target_shift");
  const order = xs.map((_, i) => i).sort((a, b) => xs[a] - xs[b]);
  return plot(
    [
      {
        xs: order.map((i) => xs[i]),
        ys: order.map((i) => msd[i]),
        kind: "both",
        color: PALETTE[0],
        label: "measured MSD",
      },
      {
        xs: order.map((i) => xs[i]),
        ys: order.map((i) => target[i] * target[i] / 8),
        kind: "both",
        color: PALETTE[1],
        label: "target^2 / 8 reference",
      },
    ],
    {
      title: "Displacement growth across box sizes",
      xLabel: "sqrt(log n)",
      yLabel: "mean square displacement",
    },
  );
}

/** Per-sample displacement scatter from an msd run. */
export function displacementScatter(msd: Table): string {
  requireColumns(msd, ["sample", "present", "disp"]);
  const present = column(msd, "present");
  const disp = column(msd, "disp");
  const kept = disp.filter((_, i) => present[i] === 1);
  if (kept.length === 0) {
    return emptyFigure("Tagged-particle displacements", "no picked particles in this run");
  }
  return histogram(kept, 20, {
    title: "Tagged-particle displacements (picked samples)",
    xLabel: "max-norm displacement from the anchor",
    yLabel: "samples",
  });
}

export { parseCsv };
