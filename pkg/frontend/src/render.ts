/**
 * Turn manifest entries into standalone log-log SVG figures: data points,
 * the least-squares fit line with its slope printed to 10 significant
 * digits, and dashed reference lines for the predicted exponents.
 *
 * The fit is recomputed here from the CSV numbers.  When the manifest
 * carries the producer's fit, the two slopes are compared and any
 * disagreement beyond 1e-9 relative is flagged on the entry — the figure
 * is still drawn, with our fit.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as echarts from "echarts/core";
import { LineChart, ScatterChart } from "echarts/charts";
import type { LineSeriesOption, ScatterSeriesOption } from "echarts/charts";
import {
  GraphicComponent,
  GridComponent,
  LegendComponent,
  TitleComponent,
} from "echarts/components";
import type {
  GraphicComponentOption,
  GridComponentOption,
  LegendComponentOption,
  TitleComponentOption,
} from "echarts/components";
import { SVGRenderer } from "echarts/renderers";

import { numericColumns, readCsv } from "./csv.js";
import { fitGrowth, GrowthFit, selectFitRows } from "./fit.js";
import { loadManifest, ManifestEntry, ReferenceSlope, resolveCsv } from "./manifest.js";

export interface PlotSpec {
  csv: string;
  x: string;
  yColumns: { column: string; transform: "none" | "reciprocal"; label: string }[];
  references: ReferenceSlope[];
  title: string;
  outPath: string;
}

export interface EntryResult {
  name: string;
  figure: string | null;
  slope: number | null;
  fitMismatch: string | null;
  error: string | null;
}

export interface RenderReport {
  results: EntryResult[];
  figures: number;
}

echarts.use([
  ScatterChart,
  LineChart,
  GridComponent,
  GraphicComponent,
  LegendComponent,
  TitleComponent,
  SVGRenderer,
]);

type FigureSeries = ScatterSeriesOption | LineSeriesOption;
type FigureOption = echarts.ComposeOption<
  | FigureSeries
  | GridComponentOption
  | GraphicComponentOption
  | LegendComponentOption
  | TitleComponentOption
>;

const WIDTH = 760;
const HEIGHT = 540;

export function specFromEntry(manifestPath: string, entry: ManifestEntry, outDir: string): PlotSpec {
  const reciprocal = entry.y_transform === "reciprocal";
  return {
    csv: resolveCsv(manifestPath, entry),
    x: entry.x,
    yColumns: [{
      column: entry.y,
      transform: entry.y_transform,
      label: reciprocal ? `1/${entry.y}` : entry.y,
    }],
    references: entry.references,
    title: entry.title,
    outPath: path.join(outDir, entry.figure),
  };
}

export function renderSpec(spec: PlotSpec): { svg: string; fit: GrowthFit } {
  const table = readCsv(spec.csv);
  const primary = spec.yColumns[0];
  const { xs, ys } = numericColumns(table, spec.x, primary.column, spec.csv);
  const values = primary.transform === "reciprocal" ? ys.map((v) => 1 / v) : ys;

  const sel = selectFitRows(xs);
  const fit = fitGrowth(sel.map((i) => xs[i]), sel.map((i) => values[i]));

  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const line = (slope: number, intercept: number) =>
    [xLo, xHi].map((x) => [x, Math.exp(intercept + slope * Math.log(x))]);

  // anchor each reference line at the fit's midpoint so slopes compare by eye
  const xMid = Math.exp((Math.log(xLo) + Math.log(xHi)) / 2);
  const yMid = Math.exp(fit.intercept + fit.slope * Math.log(xMid));
  const series: FigureSeries[] = [
    {
      type: "scatter",
      name: primary.label,
      data: xs.map((x, i) => [x, values[i]]),
      symbolSize: 9,
    },
    {
      type: "line",
      name: `fit slope ${fit.slope.toPrecision(10)}`,
      data: line(fit.slope, fit.intercept),
      showSymbol: false,
      lineStyle: { width: 2 },
    },
  ];
  for (const ref of spec.references) {
    const intercept = Math.log(yMid) - ref.slope * Math.log(xMid);
    series.push({
      type: "line",
      name: `${ref.label} (slope ${trimSlope(ref.slope)})`,
      data: line(ref.slope, intercept),
      showSymbol: false,
      lineStyle: { type: "dashed", width: 1.5 },
    });
  }

  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  const option: FigureOption = {
    animation: false,
    title: { text: spec.title, left: "center" },
    legend: { bottom: 0, left: "center" },
    grid: { left: 70, right: 30, top: 70, bottom: 80 },
    xAxis: { type: "log", name: spec.x, nameLocation: "middle", nameGap: 28 },
    yAxis: { type: "log", name: primary.label, nameLocation: "middle", nameGap: 48 },
    graphic: [{
      type: "text",
      left: 80,
      top: 44,
      style: {
        text: `fitted slope = ${fit.slope.toPrecision(10)}  (±${fit.halfWidth.toPrecision(3)})`,
        fontSize: 13,
        fontFamily: "monospace",
      },
    }],
    series,
  };
  chart.setOption(option);
  const svg = chart.renderToSVGString();
  echarts.dispose(chart);
  return { svg, fit };
}

function trimSlope(s: number): string {
  const r = Math.round(s * 1e6) / 1e6;
  return String(r);
}

export function renderManifest(manifestPath: string, outDir: string): RenderReport {
  const manifest = loadManifest(manifestPath);
  fs.mkdirSync(outDir, { recursive: true });
  const results: EntryResult[] = [];
  let figures = 0;
  for (const entry of manifest.entries) {
    const res: EntryResult = {
      name: entry.name,
      figure: null,
      slope: null,
      fitMismatch: null,
      error: null,
    };
    try {
      const spec = specFromEntry(manifestPath, entry, outDir);
      const { svg, fit } = renderSpec(spec);
      fs.writeFileSync(spec.outPath, svg);
      res.figure = spec.outPath;
      res.slope = fit.slope;
      figures += 1;
      if (entry.fit !== null) {
        const scale = Math.max(1, Math.abs(entry.fit.slope));
        if (Math.abs(fit.slope - entry.fit.slope) > 1e-9 * scale) {
          res.fitMismatch =
            `recomputed slope ${fit.slope} != manifest ${entry.fit.slope}`;
        }
      }
    } catch (err) {
      res.error = err instanceof Error ? err.message : String(err);
    }
    results.push(res);
  }
  return { results, figures };
}
