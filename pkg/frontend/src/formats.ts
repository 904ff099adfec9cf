/** Parsers for the JSON/JSONL formats written by the hardshift CLI. */

import { SchemaError } from "./csv.js";

export interface Configuration {
  n: number;
  interior: [number, number][];
  boundary: [number, number][];
}

export interface TraceStep {
  k: number;
  P: [number, number];
  tau: number;
  active: number;
  deriv: number;
}

export interface RunSummary {
  spec: { n: number; z: number; delta: number; [k: string]: unknown };
  backend: string;
  results: Record<string, unknown>;
}

function asPairList(v: unknown, file: string, field: string): [number, number][] {
  if (!Array.isArray(v)) {
    throw new SchemaError(`${file}: field '${field}' is not an array`);
  }
  return v.map((p) => {
    if (!Array.isArray(p) || p.length !== 2 || typeof p[0] !== "number") {
      throw new SchemaError(`${file}: field '${field}' has a malformed point`);
    }
    return [p[0], p[1]] as [number, number];
  });
}

export function parseConfiguration(text: string, file: string): Configuration {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`${file}: invalid JSON (${e})`);
  }
  if (typeof obj.n !== "number") {
    throw new SchemaError(`${file}: missing required field 'n'`);
  }
  return {
    n: obj.n,
    interior: asPairList(obj.interior ?? [], file, "interior"),
    boundary: asPairList(obj.boundary ?? [], file, "boundary"),
  };
}

export function parseTrace(text: string, file: string): TraceStep[] {
  const out: TraceStep[] = [];
  for (const line of text.split(/\r?\n/)) {
    if (!line.trim()) continue;
    let rec: Record<string, unknown>;
    try {
      rec = JSON.parse(line);
    } catch (e) {
      throw new SchemaError(`${file}: invalid JSONL line (${e})`);
    }
    for (const field of ["k", "P", "tau", "active", "deriv"]) {
      if (!(field in rec)) {
        throw new SchemaError(`${file}: trace record missing field '${field}'`);
      }
    }
    out.push(rec as unknown as TraceStep);
  }
  return out;
}

export function parseSummary(text: string, file: string): RunSummary {
  let obj: RunSummary;
  try {
    obj = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`${file}: invalid JSON (${e})`);
  }
  if (!obj.spec || typeof obj.spec.n !== "number") {
    throw new SchemaError(`${file}: summary is missing 'spec.n'`);
  }
  return obj;
}
