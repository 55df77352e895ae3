/**
 * The plot manifest written by `helmtrap plot-manifest`: one entry per
 * plottable series, pointing at a CSV (path relative to the manifest),
 * naming its x/y columns, and carrying reference slopes plus the
 * producer-side fit for cross-checking.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface ReferenceSlope {
  slope: number;
  label: string;
}

export interface ManifestFit {
  slope: number;
  intercept: number;
  half_width: number;
}

export interface ManifestEntry {
  name: string;
  csv: string;
  x: string;
  y: string;
  y_transform: "none" | "reciprocal";
  fit: ManifestFit | null;
  references: ReferenceSlope[];
  figure: string;
  title: string;
}

export interface Manifest {
  entries: ManifestEntry[];
}

export function loadManifest(manifestPath: string): Manifest {
  const raw = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  if (typeof raw !== "object" || raw === null || !Array.isArray(raw.entries)) {
    throw new Error(`${manifestPath}: not a plot manifest (no entries array)`);
  }
  const entries: ManifestEntry[] = [];
  raw.entries.forEach((e: unknown, i: number) => {
    entries.push(checkEntry(e, `${manifestPath} entry ${i}`));
  });
  return { entries };
}

function checkEntry(e: unknown, where: string): ManifestEntry {
  if (typeof e !== "object" || e === null) {
    throw new Error(`${where}: entry is not an object`);
  }
  const o = e as Record<string, unknown>;
  for (const key of ["name", "csv", "x", "y", "figure", "title"]) {
    if (typeof o[key] !== "string") {
      throw new Error(`${where}: missing string field '${key}'`);
    }
  }
  const transform = o["y_transform"] ?? "none";
  if (transform !== "none" && transform !== "reciprocal") {
    throw new Error(`${where}: unknown y_transform '${String(transform)}'`);
  }
  const refs: ReferenceSlope[] = [];
  if (o["references"] !== undefined) {
    if (!Array.isArray(o["references"])) {
      throw new Error(`${where}: references must be an array`);
    }
    for (const r of o["references"]) {
      if (typeof r?.slope !== "number" || typeof r?.label !== "string") {
        throw new Error(`${where}: reference needs numeric slope and label`);
      }
      refs.push({ slope: r.slope, label: r.label });
    }
  }
  let fit: ManifestFit | null = null;
  const f = o["fit"];
  if (f !== null && f !== undefined) {
    const ff = f as Record<string, unknown>;
    if (typeof ff["slope"] !== "number" || typeof ff["intercept"] !== "number") {
      throw new Error(`${where}: fit needs numeric slope and intercept`);
    }
    fit = {
      slope: ff["slope"],
      intercept: ff["intercept"],
      half_width: typeof ff["half_width"] === "number" ? ff["half_width"] : 0,
    };
  }
  return {
    name: o["name"] as string,
    csv: o["csv"] as string,
    x: o["x"] as string,
    y: o["y"] as string,
    y_transform: transform,
    fit,
    references: refs,
    figure: o["figure"] as string,
    title: o["title"] as string,
  };
}

/** CSV paths in the manifest are relative to the manifest's directory. */
export function resolveCsv(manifestPath: string, entry: ManifestEntry): string {
  return path.resolve(path.dirname(manifestPath), entry.csv);
}
