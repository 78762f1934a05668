/**
 * Least-squares fits shared with the simulation side.
 *
 * The power-law fit is defined as unweighted least squares of ln(y) on
 * ln(x); sidecar values must agree with the producer's own fits to 1e-9,
 * so the definition here must not drift.
 */

export interface PowerLawFit {
  exponent: number;
  prefactor: number;
  r2: number;
}

export function linearFit(x: number[], y: number[]): {
  slope: number;
  intercept: number;
  r2: number;
} {
  const n = x.length;
  if (n < 2 || y.length !== n) throw new Error("need at least two points");
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (let i = 0; i < n; i++) {
    const dx = x[i] - mx;
    const dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx === 0) throw new Error("degenerate fit: constant abscissa");
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  for (let i = 0; i < n; i++) {
    const r = y[i] - (slope * x[i] + intercept);
    ssRes += r * r;
  }
  const r2 = syy > 0 ? 1 - ssRes / syy : 1;
  return { slope, intercept, r2 };
}

export function powerLawFit(x: number[], y: number[]): PowerLawFit {
  for (const v of [...x, ...y]) {
    if (!(v > 0)) throw new Error("power-law fit needs positive data");
  }
  const { slope, intercept, r2 } = linearFit(x.map(Math.log), y.map(Math.log));
  return { exponent: slope, prefactor: Math.exp(intercept), r2 };
}
