#!/usr/bin/env node
/** Render report figures from hardshift CLI output directories.
 *
 *   render --in RUN_DIR --out FIG_DIR
 *
 * RUN_DIR and its immediate subdirectories are scanned for the documented
 * output files; every figure whose inputs are present is rendered as a
 * deterministic SVG, plus an index.html. Missing files are skipped;
 * malformed files (schema drift) abort with an error naming the problem.
 */

import { existsSync, mkdirSync, readdirSync, readFileSync, statSync, writeFileSync } from "fs";
import { basename, join } from "path";

import { parseCsv, SchemaError } from "./csv.js";
import {
  clusterHistogram, configPanels, deltaScaling, displacementGrowth,
  displacementScatter, logDensityHistogram, profileEvolution, slowdownShape,
} from "./figures.js";
import { parseConfiguration, parseSummary, parseTrace } from "./formats.js";

interface Rendered {
  file: string;
  caption: string;
}

function renderDir(dir: string, out: string, prefix: string, made: Rendered[]): void {
  const read = (name: string) => readFileSync(join(dir, name), "utf8");
  const has = (name: string) => existsSync(join(dir, name));
  const emit = (name: string, svg: string, caption: string) => {
    const file = prefix ? `${prefix}_${name}` : name;
    writeFileSync(join(out, file), svg);
    made.push({ file, caption });
  };

  if (has("profile.csv") && has("trace.jsonl")) {
    const profile = parseCsv(read("profile.csv"), join(dir, "profile.csv"));
    const trace = parseTrace(read("trace.jsonl"), join(dir, "trace.jsonl"));
    emit("profile_evolution.svg", profileEvolution(profile, trace),
      "Shift profile evolution with selected minima");
  }
  if (has("summary.json") && has("trace.jsonl")) {
    const summary = parseSummary(read("summary.json"), join(dir, "summary.json"));
    emit("slowdown_shape.svg", slowdownShape(summary),
      "Slow-down constraint shape");
  }
  if (has("input.json") && has("transformed.json")) {
    const before = parseConfiguration(read("input.json"), join(dir, "input.json"));
    const after = parseConfiguration(read("transformed.json"), join(dir, "transformed.json"));
    emit("config_panels.svg", configPanels(before, after),
      "Configuration before/after the transformation");
  }
  if (has("clusters.csv")) {
    const t = parseCsv(read("clusters.csv"), join(dir, "clusters.csv"));
    emit("cluster_reach.svg", clusterHistogram(t), "Cluster reach excess");
  }
  for (const name of ["verify.csv", "bounds.csv"]) {
    if (has(name)) {
      const t = parseCsv(read(name), join(dir, name));
      emit(`${basename(name, ".csv")}_log_density.svg`, logDensityHistogram(t),
        `log(phi phibar) histogram from ${name}`);
      break;
    }
  }
  if (has("sweep.csv")) {
    const t = parseCsv(read("sweep.csv"), join(dir, "sweep.csv"));
    if (t.header.includes("delta_sq")) {
      emit("delta_scaling.svg", deltaScaling(t), "Density log-cost vs delta^2");
    }
    if (t.header.includes("mean_square_displacement")) {
      emit("displacement_growth.svg", displacementGrowth(t),
        "Displacement growth vs sqrt(log n)");
    }
  }
  if (has("msd.csv")) {
    const t = parseCsv(read("msd.csv"), join(dir, "msd.csv"));
    emit("displacements.svg", displacementScatter(t),
      "Tagged-particle displacement histogram");
  }
}

export function render(inDir: string, outDir: string): Rendered[] {
  if (!existsSync(inDir)) {
    throw new SchemaError(`input directory not found: ${inDir}`);
  }
  mkdirSync(outDir, { recursive: true });
  const made: Rendered[] = [];
  renderDir(inDir, outDir, "", made);
  for (const entry of readdirSync(inDir).sort()) {
    const sub = join(inDir, entry);
    if (statSync(sub).isDirectory()) {
      renderDir(sub, outDir, entry, made);
    }
  }
  const items = made
    .map((m) => `<li><p>${m.caption}</p><img src="${m.file}" alt="${m.caption}"/></li>`)
    .join("\n");
  const note = made.length ? "" : "<p>No renderable outputs found in the input directory.</p>";
  writeFileSync(join(outDir, "index.html"),
    `<!doctype html>\n<html><head><meta charset="utf-8"/><title>hardshift report</title></head>\n` +
    `<body><h1>hardshift report figures</h1>${note}<ul>\n${items}\n</ul></body></html>\n`);
  return made;
}

function main(argv: string[]): number {
  const args = argv.slice(2);
  if (args[0] !== "render") {
    console.error("usage: render --in DIR --out DIR");
    return 2;
  }
  let inDir = "";
  let outDir = "";
  for (let i = 1; i < args.length; i += 2) {
    if (args[i] === "--in") inDir = args[i + 1];
    else if (args[i] === "--out") outDir = args[i + 1];
    else {
      console.error(`unknown flag ${args[i]}`);
      return 2;
    }
  }
  if (!inDir || !outDir) {
    console.error("usage: render --in DIR --out DIR");
    return 2;
  }
  try {
    const made = render(inDir, outDir);
    console.log(`rendered ${made.length} figure(s) -> ${outDir}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

if (process.argv[1] && process.argv[1].endsWith("index.js")) {
  process.exit(main(process.argv));
}
