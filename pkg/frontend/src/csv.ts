/** Minimal CSV reading with loud schema validation. */

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
  file: string;
}

export function parseCsv(text: string, file: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${file}: empty CSV (no header row)`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const r of rows) {
    if (r.length !== header.length) {
      throw new SchemaError(
        `${file}: row has ${r.length} fields, header has ${header.length}`,
      );
    }
  }
  return { header, rows, file };
}

/** Column accessor; throws a SchemaError naming the missing column. */
export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`${table.file}: missing required column '${name}'`);
  }
  return table.rows.map((r) => {
    const v = Number(r[idx]);
    if (Number.isNaN(v)) {
      throw new SchemaError(
        `${table.file}: non-numeric value '${r[idx]}' in column '${name}'`,
      );
    }
    return v;
  });
}

export function requireColumns(table: Table, names: string[]): void {
  for (const n of names) {
    if (!table.header.includes(n)) {
      throw new SchemaError(`${table.file}: missing required column '${n}'`);
    }
  }
}
