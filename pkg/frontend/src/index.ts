export { fitGrowth, selectFitRows } from "./fit.js";
export type { GrowthFit } from "./fit.js";
export { readCsv, numericColumns } from "./csv.js";
export type { CsvTable } from "./csv.js";
export { loadManifest, resolveCsv } from "./manifest.js";
export type { Manifest, ManifestEntry, ManifestFit, ReferenceSlope } from "./manifest.js";
export { renderManifest, renderSpec, specFromEntry } from "./render.js";
export type { EntryResult, PlotSpec, RenderReport } from "./render.js";
