/**
 * Column access over the sweep CSVs.  Values are parsed as doubles; empty
 * cells (columns that do not apply to a given run) come back as NaN and
 * are dropped by the column extractor.
 */

import * as fs from "node:fs";
import Papa from "papaparse";

export interface CsvTable {
  header: string[];
  rows: Record<string, string>[];
}

export function readCsv(csvPath: string): CsvTable {
  const text = fs.readFileSync(csvPath, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  // delimiter auto-detection "fails" on empty input; the header check below
  // gives the better message for that case
  const errors = parsed.errors.filter((e) => e.code !== "UndetectableDelimiter");
  if (errors.length > 0) {
    const e = errors[0];
    throw new Error(`${csvPath}: ${e.message} (row ${e.row})`);
  }
  const header = (parsed.meta.fields ?? []).filter((f) => f !== "");
  if (header.length === 0) {
    throw new Error(`${csvPath}: empty CSV`);
  }
  return { header, rows: parsed.data };
}

/**
 * Pull two aligned numeric columns, skipping rows where either value is
 * missing or non-numeric.  Throws if a requested column is absent — the
 * caller reports that per entry and moves on.
 */
export function numericColumns(
  table: CsvTable,
  xName: string,
  yName: string,
  csvPath: string,
): { xs: number[]; ys: number[] } {
  for (const name of [xName, yName]) {
    if (!table.header.includes(name)) {
      throw new Error(`${csvPath}: no column '${name}' (header: ${table.header.join(", ")})`);
    }
  }
  const xs: number[] = [];
  const ys: number[] = [];
  for (const row of table.rows) {
    const x = parseFloat(row[xName]);
    const y = parseFloat(row[yName]);
    if (Number.isFinite(x) && Number.isFinite(y)) {
      xs.push(x);
      ys.push(y);
    }
  }
  return { xs, ys };
}
