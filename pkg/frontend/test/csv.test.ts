import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { numericColumns, readCsv } from "../src/csv.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "csv-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function writeCsv(text: string): string {
  const p = path.join(dir, "data.csv");
  fs.writeFileSync(p, text);
  return p;
}

describe("readCsv", () => {
  it("parses header and rows", () => {
    const p = writeCsv("k,cond\n10,3.5\n20,4.5\n");
    const table = readCsv(p);
    expect(table.header).toEqual(["k", "cond"]);
    expect(table.rows).toHaveLength(2);
    expect(table.rows[1].cond).toBe("4.5");
  });

  it("rejects an empty file", () => {
    const p = writeCsv("");
    expect(() => readCsv(p)).toThrow(/empty CSV/);
  });
});

describe("numericColumns", () => {
  it("extracts paired finite values and skips the rest", () => {
    const p = writeCsv("k,res\n10,1.5\n15,nan\n20,2.5\n25,\n30,3.5\n");
    const { xs, ys } = numericColumns(readCsv(p), "k", "res", p);
    expect(xs).toEqual([10, 20, 30]);
    expect(ys).toEqual([1.5, 2.5, 3.5]);
  });

  it("names the file and header when a column is absent", () => {
    const p = writeCsv("k,cond\n10,3.5\n20,4.5\n");
    expect(() => numericColumns(readCsv(p), "k", "norm_S", p)).toThrow(
      /no column 'norm_S' \(header: k, cond\)/,
    );
  });
});
