/**
 * Minimal RFC-4180 CSV reader for the scarkit output bundles.
 *
 * Every bundle file carries a header row; rows are accessed by column
 * name and missing columns fail loudly (figures never guess at schemas).
 */

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let inQuotes = false;
  let i = 0;
  const push = () => {
    row.push(field);
    field = "";
  };
  const endRow = () => {
    push();
    // ignore completely empty trailing lines
    if (row.length > 1 || row[0] !== "") rows.push(row);
    row = [];
  };
  while (i < text.length) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i++;
        continue;
      }
      field += ch;
      i++;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i++;
    } else if (ch === ",") {
      push();
      i++;
    } else if (ch === "\r") {
      i++;
    } else if (ch === "\n") {
      endRow();
      i++;
    } else {
      field += ch;
      i++;
    }
  }
  if (field !== "" || row.length > 0) endRow();
  if (rows.length === 0) throw new Error("empty CSV");
  const [columns, ...data] = rows;
  for (const r of data) {
    if (r.length !== columns.length) {
      throw new Error(
        `ragged CSV row: expected ${columns.length} fields, got ${r.length}`,
      );
    }
  }
  return { columns, rows: data };
}

export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new Error(
        `missing column '${name}' (have: ${table.columns.join(", ")})`,
      );
    }
  }
}

export function column(table: Table, name: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new Error(`missing column '${name}'`);
  return table.rows.map((r) => r[idx]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((v) => {
    const x = Number(v);
    if (v === "" || Number.isNaN(x)) {
      throw new Error(`non-numeric value '${v}' in column '${name}'`);
    }
    return x;
  });
}

/** Rows grouped by the string value of a key column, preserving order. */
export function groupBy(table: Table, key: string): Map<string, Table> {
  const idx = table.columns.indexOf(key);
  if (idx < 0) throw new Error(`missing column '${key}'`);
  const out = new Map<string, Table>();
  for (const row of table.rows) {
    const k = row[idx];
    if (!out.has(k)) out.set(k, { columns: table.columns, rows: [] });
    out.get(k)!.rows.push(row);
  }
  return out;
}
