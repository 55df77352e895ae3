#!/usr/bin/env node
/**
 * helmtrap-plots --manifest results/manifest.json --outdir results/figures
 *
 * Reads a plot manifest plus the CSV files it points at and writes one SVG
 * per entry.  Entries that cannot be drawn (missing CSV, missing column)
 * are reported on stderr and skipped; the rest still render.  An empty
 * manifest is not an error — there is simply nothing to draw.
 */

import { renderManifest } from "./render.js";

function usage(): void {
  process.stderr.write(
    "usage: helmtrap-plots --manifest <manifest.json> --outdir <dir>\n",
  );
}

function parseArgs(argv: string[]): { manifest: string; outdir: string } | null {
  let manifest: string | null = null;
  let outdir: string | null = null;
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === "--manifest" && i + 1 < argv.length) {
      manifest = argv[i + 1];
      i += 1;
    } else if (arg === "--outdir" && i + 1 < argv.length) {
      outdir = argv[i + 1];
      i += 1;
    } else {
      process.stderr.write(`unknown argument: ${arg}\n`);
      return null;
    }
  }
  if (manifest === null || outdir === null) {
    return null;
  }
  return { manifest, outdir };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  if (args === null) {
    usage();
    return 2;
  }
  let report;
  try {
    report = renderManifest(args.manifest, args.outdir);
  } catch (err) {
    const msg = err instanceof Error ? err.message : String(err);
    process.stderr.write(`error: ${msg}\n`);
    return 2;
  }
  for (const res of report.results) {
    if (res.error !== null) {
      process.stderr.write(`warning: ${res.name}: ${res.error}\n`);
    } else if (res.fitMismatch !== null) {
      process.stderr.write(`warning: ${res.name}: ${res.fitMismatch}\n`);
      process.stdout.write(`${res.figure}\n`);
    } else {
      process.stdout.write(`${res.figure}\n`);
    }
  }
  if (report.results.length === 0) {
    process.stdout.write("manifest has no entries; nothing to draw\n");
  }
  const mismatches = report.results.filter((r) => r.fitMismatch !== null).length;
  return mismatches > 0 ? 1 : 0;
}

process.exit(main(process.argv.slice(2)));
