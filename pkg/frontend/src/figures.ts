/**
 * Figure registry: each figure consumes one or two CSV files from a run
 * directory, renders an SVG and re-derives any fitted parameters into a
 * sidecar object.  No physics is recomputed here beyond the shared
 * least-squares definitions in fit.ts.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { Table, groupBy, numericColumn, parseCsv, requireColumns } from "./csv.js";
import { powerLawFit } from "./fit.js";
import { renderHeatmap, renderPanel, seriesColor, Series, VerticalMarker } from "./svg.js";

export interface FigureResult {
  svg: string;
  sidecar: Record<string, unknown>;
}

export interface FigureSpec {
  id: string;
  inputs: string[];
  description: string;
  render(dir: string): FigureResult;
}

function load(dir: string, name: string, columns: string[]): Table {
  const table = parseCsv(readFileSync(join(dir, name), "utf8"));
  requireColumns(table, columns);
  return table;
}

function entropyScatter(dir: string): FigureResult {
  const t = load(dir, "spectrum.csv", ["energy", "entropy_nats", "is_scar"]);
  const energy = numericColumn(t, "energy");
  const entCol = t.columns.indexOf("entropy_nats");
  const scar = numericColumn(t, "is_scar");
  const pts = t.rows
    .map((r, i) => ({ e: energy[i], s: Number(r[entCol]), scar: scar[i] }))
    .filter((p) => r_ok(p.s));
  const thermal = pts.filter((p) => !p.scar);
  const marked = pts.filter((p) => p.scar);
  const series: Series[] = [
    {
      x: thermal.map((p) => p.e),
      y: thermal.map((p) => p.s),
      label: "eigenstates",
    },
  ];
  if (marked.length) {
    series.push({
      x: marked.map((p) => p.e),
      y: marked.map((p) => p.s),
      color: "#d62728",
      label: "scar",
    });
  }
  return {
    svg: renderPanel({
      title: "Eigenstate entanglement entropy",
      xLabel: "energy",
      yLabel: "entropy (nats)",
      series,
    }),
    sidecar: { n_states: pts.length, n_scar: marked.length },
  };
}

const r_ok = (v: number) => Number.isFinite(v);

function fidelityVsSpeed(dir: string): FigureResult {
  const t = load(dir, "fidelity_scan.csv", ["n_sites", "variant", "v", "fidelity"]);
  const groups = groupBy(t, "variant");
  const series: Series[] = [];
  let i = 0;
  for (const [variant, sub] of groups) {
    for (const [n, byN] of groupBy(sub, "n_sites")) {
      series.push({
        x: numericColumn(byN, "v"),
        y: numericColumn(byN, "fidelity"),
        label: `${variant} N=${n}`,
        color: seriesColor(i++),
        line: true,
      });
    }
  }
  const markers: VerticalMarker[] = [];
  try {
    const vt = load(dir, "velocity.csv", ["variant", "v_threshold"]);
    const vcol = numericColumn(vt, "v_threshold");
    const varcol = vt.columns.indexOf("variant");
    vt.rows.forEach((r, j) =>
      markers.push({ x: vcol[j], label: `v* ${r[varcol]}` }),
    );
  } catch {
    // scan-only bundles carry no threshold table; markers are optional
  }
  return {
    svg: renderPanel({
      title: "Adiabatic fidelity vs ramp speed",
      xLabel: "ramp speed v",
      yLabel: "fidelity",
      xLog: true,
      series,
      markers,
    }),
    sidecar: { n_series: series.length },
  };
}

function velocityScaling(dir: string): FigureResult {
  const t = load(dir, "velocity.csv", ["n_sites", "variant", "v_threshold"]);
  const series: Series[] = [];
  const fits: Record<string, unknown> = {};
  let i = 0;
  for (const [variant, sub] of groupBy(t, "variant")) {
    const n = numericColumn(sub, "n_sites");
    const v = numericColumn(sub, "v_threshold");
    series.push({ x: n, y: v, label: variant, color: seriesColor(i++), line: true });
    if (n.length >= 2) fits[variant] = powerLawFit(n, v);
  }
  return {
    svg: renderPanel({
      title: "Adiabatic velocity vs system size",
      xLabel: "N",
      yLabel: "v_threshold",
      xLog: true,
      yLog: true,
      series,
    }),
    sidecar: { fits },
  };
}

function catastropheCollapse(dir: string): FigureResult {
  const t = load(dir, "qsl.csv", ["variant", "n_sites", "s", "log_C", "C_N"]);
  const first = groupBy(t, "variant").values().next().value as Table;
  const series: Series[] = [];
  let i = 0;
  const byN = groupBy(first, "n_sites");
  for (const [n, sub] of byN) {
    const s = numericColumn(sub, "s");
    const logc = numericColumn(sub, "log_C");
    const nn = Number(n);
    const pts = s
      .map((sv, j) => [nn * sv * sv, -logc[j]] as const)
      .filter(([x, y]) => x > 0 && y > 0);
    series.push({
      x: pts.map((p) => p[0]),
      y: pts.map((p) => p[1]),
      label: `N=${n}`,
      color: seriesColor(i++),
      line: true,
    });
  }
  // collapse fit: C_N = c N^delta from one row per N
  const ns: number[] = [];
  const cs: number[] = [];
  for (const [n, sub] of byN) {
    ns.push(Number(n));
    cs.push(numericColumn(sub, "C_N")[0]);
  }
  const fits =
    ns.length >= 2 ? { catastrophe: powerLawFit(ns, cs) } : {};
  return {
    svg: renderPanel({
      title: "Overlap collapse: -ln C vs N s^2",
      xLabel: "N s^2",
      yLabel: "-ln C(s)",
      xLog: true,
      yLog: true,
      series,
    }),
    sidecar: { fits },
  };
}

function qslScaling(dir: string): FigureResult {
  const t = load(dir, "qsl.csv", ["variant", "n_sites", "C_N", "dE0", "v_qsl"]);
  const series: Series[] = [];
  const fits: Record<string, unknown> = {};
  let i = 0;
  for (const [variant, sub] of groupBy(t, "variant")) {
    const perN = groupBy(sub, "n_sites");
    const ns: number[] = [];
    const vq: number[] = [];
    for (const [n, rows] of perN) {
      ns.push(Number(n));
      vq.push(numericColumn(rows, "v_qsl")[0]);
    }
    series.push({ x: ns, y: vq, label: `bound ${variant}`, color: seriesColor(i++), line: true });
    if (ns.length >= 2) {
      fits[variant] = {
        catastrophe: powerLawFit(
          ns,
          [...perN.values()].map((rows) => numericColumn(rows, "C_N")[0]),
        ),
        v_qsl: powerLawFit(ns, vq),
      };
    }
  }
  return {
    svg: renderPanel({
      title: "Speed-limit bound vs system size",
      xLabel: "N",
      yLabel: "v bound",
      xLog: true,
      yLog: true,
      series,
    }),
    sidecar: { fits },
  };
}

function populationHeatmap(dir: string): FigureResult {
  const t = load(dir, "populations.csv", ["s", "n", "energy", "rho_nn"]);
  const s = numericColumn(t, "s");
  const e = numericColumn(t, "energy");
  const rho = numericColumn(t, "rho_nn");
  const sVals = [...new Set(s)].sort((a, b) => a - b);
  const eMin = Math.min(...e);
  const eMax = Math.max(...e);
  const nBins = 80;
  const de = (eMax - eMin) / nBins || 1;
  const yEdges = Array.from({ length: nBins + 1 }, (_, i) => eMin + i * de);
  const xEdges =
    sVals.length > 1
      ? [...sVals.map((v, i) => (i ? (v + sVals[i - 1]) / 2 : v - 0.5)), sVals[sVals.length - 1] + 0.5]
      : [sVals[0] - 0.5, sVals[0] + 0.5];
  const values = Array.from({ length: nBins }, () => new Array(sVals.length).fill(0));
  for (let i = 0; i < s.length; i++) {
    const ix = sVals.indexOf(s[i]);
    const iy = Math.min(nBins - 1, Math.max(0, Math.floor((e[i] - eMin) / de)));
    values[iy][ix] += rho[i];
  }
  return {
    svg: renderHeatmap({
      title: "Final-state populations over the spectrum",
      xLabel: "s",
      yLabel: "energy",
      xEdges,
      yEdges,
      values,
      logColor: true,
    }),
    sidecar: { n_slices: sVals.length },
  };
}

function susceptibilityScaling(dir: string): FigureResult {
  const t = load(dir, "susceptibility.csv", [
    "n_sites",
    "eps",
    "chi_reg_ref",
    "gauge_norm",
  ]);
  const series: Series[] = [];
  const fits: Record<string, unknown> = {};
  let i = 0;
  for (const [eps, sub] of groupBy(t, "eps")) {
    const n = numericColumn(sub, "n_sites");
    const chi = numericColumn(sub, "chi_reg_ref");
    series.push({
      x: n,
      y: chi,
      label: `eps=${eps}`,
      color: seriesColor(i++),
      line: true,
    });
    if (Number(eps) === 0 && n.length >= 2) {
      fits["gamma_eps0"] = powerLawFit(n, chi);
    }
  }
  return {
    svg: renderPanel({
      title: "Regularized susceptibility vs size",
      xLabel: "N",
      yLabel: "chi (regularized)",
      yLog: true,
      series,
    }),
    sidecar: { fits },
  };
}

function kpmSpectra(dir: string): FigureResult {
  const t = load(dir, "kpm.csv", ["probe_n", "probe_energy", "omega", "g"]);
  const series: Series[] = [];
  const peaks: Record<string, number> = {};
  let i = 0;
  for (const [probe, sub] of groupBy(t, "probe_n")) {
    const om = numericColumn(sub, "omega");
    const g = numericColumn(sub, "g");
    series.push({
      x: om,
      y: g.map((v) => Math.max(v, 0)),
      label: `n=${probe}`,
      color: seriesColor(i++),
      line: true,
      marker: "none",
    });
    let best = 0;
    for (let j = 1; j < g.length; j++) if (g[j] > g[best]) best = j;
    peaks[probe] = om[best];
  }
  return {
    svg: renderPanel({
      title: "Spectral weight of gapped-model probes",
      xLabel: "omega",
      yLabel: "G(omega)",
      series,
    }),
    sidecar: { peaks },
  };
}

export const FIGURES: FigureSpec[] = [
  {
    id: "entropy-scatter",
    inputs: ["spectrum.csv"],
    description: "entanglement entropy over the spectrum, scar highlighted",
    render: entropyScatter,
  },
  {
    id: "fidelity-vs-speed",
    inputs: ["fidelity_scan.csv", "velocity.csv"],
    description: "adiabatic fidelity curves with threshold markers",
    render: fidelityVsSpeed,
  },
  {
    id: "velocity-scaling",
    inputs: ["velocity.csv"],
    description: "log-log adiabatic velocity vs size with power-law fit",
    render: velocityScaling,
  },
  {
    id: "catastrophe-collapse",
    inputs: ["qsl.csv"],
    description: "overlap decay collapse and catastrophe-exponent fit",
    render: catastropheCollapse,
  },
  {
    id: "qsl-scaling",
    inputs: ["qsl.csv"],
    description: "speed-limit bound scaling with size",
    render: qslScaling,
  },
  {
    id: "population-heatmap",
    inputs: ["populations.csv"],
    description: "final populations binned over energy",
    render: populationHeatmap,
  },
  {
    id: "susceptibility-scaling",
    inputs: ["susceptibility.csv"],
    description: "regularized susceptibility panels with reference fit",
    render: susceptibilityScaling,
  },
  {
    id: "kpm-spectra",
    inputs: ["kpm.csv"],
    description: "kernel-polynomial spectral functions per probe",
    render: kpmSpectra,
  },
];

export function figureById(id: string): FigureSpec {
  const spec = FIGURES.find((f) => f.id === id);
  if (!spec) {
    throw new Error(
      `unknown figure '${id}' (known: ${FIGURES.map((f) => f.id).join(", ")})`,
    );
  }
  return spec;
}
