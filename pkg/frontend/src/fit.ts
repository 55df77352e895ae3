/**
 * Least-squares line through (log x, log y) — re-implemented here, on the
 * raw CSV numbers, rather than trusting the slope already present in the
 * manifest.  The producer fits on the rows with k >= 10 when at least four
 * such rows exist and on all rows otherwise; selectFitRows mirrors that
 * rule so both sides see the same points.
 */

export interface GrowthFit {
  slope: number;
  intercept: number;
  halfWidth: number; // twice the standard error of the slope
  n: number;
}

export function fitGrowth(xs: number[], ys: number[]): GrowthFit {
  if (xs.length !== ys.length) {
    throw new Error(`fit needs matching arrays, got ${xs.length}/${ys.length}`);
  }
  if (xs.length < 4) {
    throw new Error(`need at least 4 points for a growth fit, got ${xs.length}`);
  }
  for (let i = 0; i < xs.length; i++) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) {
      throw new Error(`growth fits need positive data (row ${i}: ${xs[i]}, ${ys[i]})`);
    }
  }
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const n = lx.length;
  const xbar = mean(lx);
  let sxx = 0;
  for (const v of lx) sxx += (v - xbar) * (v - xbar);
  let sxy = 0;
  for (let i = 0; i < n; i++) sxy += (lx[i] - xbar) * ly[i];
  const slope = sxy / sxx;
  const intercept = mean(ly) - slope * xbar;
  let ssr = 0;
  for (let i = 0; i < n; i++) {
    const r = ly[i] - (intercept + slope * lx[i]);
    ssr += r * r;
  }
  const se = n > 2 ? Math.sqrt(ssr / (n - 2) / sxx) : 0;
  return { slope, intercept, halfWidth: 2 * se, n };
}

function mean(v: number[]): number {
  let s = 0;
  for (const x of v) s += x;
  return s / v.length;
}

/** Indices the producer's fit used: k >= 10 when that leaves >= 4 rows. */
export function selectFitRows(ks: number[]): number[] {
  const big: number[] = [];
  for (let i = 0; i < ks.length; i++) if (ks[i] >= 10) big.push(i);
  if (big.length >= 4) return big;
  return ks.map((_, i) => i);
}
