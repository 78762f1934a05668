/**
 * Dependency-free SVG plotting: scatter/line panels with linear or log
 * axes, plus colored cell maps.  Output is a standalone .svg document.
 */

export interface Series {
  x: number[];
  y: number[];
  color?: string;
  label?: string;
  marker?: "circle" | "none";
  line?: boolean;
}

export interface VerticalMarker {
  x: number;
  color?: string;
  label?: string;
}

export interface PanelSpec {
  title?: string;
  xLabel?: string;
  yLabel?: string;
  xLog?: boolean;
  yLog?: boolean;
  series: Series[];
  markers?: VerticalMarker[];
  width?: number;
  height?: number;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

interface Scale {
  (v: number): number;
}

function makeScale(lo: number, hi: number, a: number, b: number, log: boolean): Scale {
  if (log) {
    const llo = Math.log10(lo);
    const lhi = Math.log10(hi);
    return (v) => a + ((Math.log10(v) - llo) / (lhi - llo || 1)) * (b - a);
  }
  return (v) => a + ((v - lo) / (hi - lo || 1)) * (b - a);
}

function extent(values: number[], log: boolean): [number, number] {
  const ok = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  if (!ok.length) throw new Error("no plottable values");
  let lo = Math.min(...ok);
  let hi = Math.max(...ok);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (log) return [lo / 1.3, hi * 1.3];
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

function ticks(lo: number, hi: number, log: boolean): number[] {
  if (log) {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
      out.push(10 ** e);
    }
    return out.length ? out : [lo, hi];
  }
  const span = hi - lo;
  const step = 10 ** Math.floor(Math.log10(span / 4));
  const mult = span / step > 8 ? 2 : 1;
  const out: number[] = [];
  for (let v = Math.ceil(lo / (step * mult)) * step * mult; v <= hi; v += step * mult) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(6)));
  return v.toExponential(0).replace("+", "");
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function renderPanel(spec: PanelSpec): string {
  const w = spec.width ?? 640;
  const h = spec.height ?? 440;
  const m = { left: 70, right: 20, top: spec.title ? 36 : 16, bottom: 52 };
  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s) => s.y);
  for (const mk of spec.markers ?? []) xs.push(mk.x);
  const [xlo, xhi] = extent(xs, !!spec.xLog);
  const [ylo, yhi] = extent(ys, !!spec.yLog);
  const sx = makeScale(xlo, xhi, m.left, w - m.right, !!spec.xLog);
  const sy = makeScale(ylo, yhi, h - m.bottom, m.top, !!spec.yLog);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}" font-family="Helvetica, Arial, sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${w}" height="${h}" fill="white"/>`);
  if (spec.title) {
    parts.push(
      `<text x="${w / 2}" y="20" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`,
    );
  }
  // frame and ticks
  parts.push(
    `<rect x="${m.left}" y="${m.top}" width="${w - m.left - m.right}" height="${h - m.top - m.bottom}" fill="none" stroke="#333"/>`,
  );
  for (const t of ticks(xlo, xhi, !!spec.xLog)) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${h - m.bottom}" x2="${px}" y2="${h - m.bottom + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${h - m.bottom + 18}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(ylo, yhi, !!spec.yLog)) {
    const py = sy(t);
    parts.push(
      `<line x1="${m.left - 5}" y1="${py}" x2="${m.left}" y2="${py}" stroke="#333"/>`,
      `<text x="${m.left - 8}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  if (spec.xLabel) {
    parts.push(
      `<text x="${(m.left + w - m.right) / 2}" y="${h - 12}" text-anchor="middle">${esc(spec.xLabel)}</text>`,
    );
  }
  if (spec.yLabel) {
    parts.push(
      `<text x="16" y="${(m.top + h - m.bottom) / 2}" text-anchor="middle" transform="rotate(-90 16 ${(m.top + h - m.bottom) / 2})">${esc(spec.yLabel)}</text>`,
    );
  }
  for (const mk of spec.markers ?? []) {
    const px = sx(mk.x);
    parts.push(
      `<line x1="${px}" y1="${m.top}" x2="${px}" y2="${h - m.bottom}" stroke="${mk.color ?? "#888"}" stroke-dasharray="5 4"/>`,
    );
    if (mk.label) {
      parts.push(
        `<text x="${px + 4}" y="${m.top + 14}" fill="${mk.color ?? "#888"}">${esc(mk.label)}</text>`,
      );
    }
  }
  spec.series.forEach((s, i) => {
    const color = s.color ?? seriesColor(i);
    const pts = s.x
      .map((x, j) => [x, s.y[j]] as const)
      .filter(
        ([x, y]) =>
          Number.isFinite(x) &&
          Number.isFinite(y) &&
          (!spec.xLog || x > 0) &&
          (!spec.yLog || y > 0),
      );
    if (s.line) {
      const d = pts
        .map(([x, y], j) => `${j ? "L" : "M"}${sx(x).toFixed(2)},${sy(y).toFixed(2)}`)
        .join(" ");
      parts.push(`<path d="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    }
    if (s.marker !== "none") {
      for (const [x, y] of pts) {
        parts.push(
          `<circle cx="${sx(x).toFixed(2)}" cy="${sy(y).toFixed(2)}" r="2.6" fill="${color}"/>`,
        );
      }
    }
    if (s.label) {
      const ly = m.top + 16 + 16 * i;
      parts.push(
        `<circle cx="${w - m.right - 120}" cy="${ly - 4}" r="3" fill="${color}"/>`,
        `<text x="${w - m.right - 110}" y="${ly}">${esc(s.label)}</text>`,
      );
    }
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export interface HeatSpec {
  title?: string;
  xLabel?: string;
  yLabel?: string;
  xEdges: number[];
  yEdges: number[];
  values: number[][]; // [yIndex][xIndex], normalized externally
  logColor?: boolean;
  width?: number;
  height?: number;
}

function colorMap(t: number): string {
  // blue -> red through white, clamped
  const u = Math.max(0, Math.min(1, t));
  const r = Math.round(255 * Math.min(1, 2 * u));
  const b = Math.round(255 * Math.min(1, 2 * (1 - u)));
  const g = Math.round(255 * (1 - Math.abs(2 * u - 1)) * 0.85);
  return `rgb(${r},${g},${b})`;
}

export function renderHeatmap(spec: HeatSpec): string {
  const w = spec.width ?? 640;
  const h = spec.height ?? 440;
  const m = { left: 70, right: 20, top: spec.title ? 36 : 16, bottom: 52 };
  const nx = spec.xEdges.length - 1;
  const ny = spec.yEdges.length - 1;
  const flat = spec.values.flat().filter((v) => Number.isFinite(v));
  let vmax = Math.max(...flat, 1e-300);
  let vmin = spec.logColor ? vmax * 1e-8 : 0;
  const scale = (v: number) =>
    spec.logColor
      ? (Math.log10(Math.max(v, vmin)) - Math.log10(vmin)) /
        (Math.log10(vmax) - Math.log10(vmin))
      : v / vmax;
  const sx = makeScale(spec.xEdges[0], spec.xEdges[nx], m.left, w - m.right, false);
  const sy = makeScale(spec.yEdges[0], spec.yEdges[ny], h - m.bottom, m.top, false);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}" font-family="Helvetica, Arial, sans-serif" font-size="12">`,
    `<rect width="${w}" height="${h}" fill="white"/>`,
  );
  if (spec.title) {
    parts.push(
      `<text x="${w / 2}" y="20" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`,
    );
  }
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      const v = spec.values[iy][ix];
      if (!Number.isFinite(v) || v <= 0) continue;
      const x0 = sx(spec.xEdges[ix]);
      const x1 = sx(spec.xEdges[ix + 1]);
      const y0 = sy(spec.yEdges[iy]);
      const y1 = sy(spec.yEdges[iy + 1]);
      parts.push(
        `<rect x="${Math.min(x0, x1).toFixed(2)}" y="${Math.min(y0, y1).toFixed(2)}" width="${Math.abs(x1 - x0).toFixed(2)}" height="${Math.abs(y1 - y0).toFixed(2)}" fill="${colorMap(scale(v))}"/>`,
      );
    }
  }
  parts.push(
    `<rect x="${m.left}" y="${m.top}" width="${w - m.left - m.right}" height="${h - m.top - m.bottom}" fill="none" stroke="#333"/>`,
  );
  for (const t of ticks(spec.xEdges[0], spec.xEdges[nx], false)) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${h - m.bottom}" x2="${px}" y2="${h - m.bottom + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${h - m.bottom + 18}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(spec.yEdges[0], spec.yEdges[ny], false)) {
    const py = sy(t);
    parts.push(
      `<line x1="${m.left - 5}" y1="${py}" x2="${m.left}" y2="${py}" stroke="#333"/>`,
      `<text x="${m.left - 8}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`,
    );
  }
  if (spec.xLabel)
    parts.push(
      `<text x="${(m.left + w - m.right) / 2}" y="${h - 12}" text-anchor="middle">${esc(spec.xLabel)}</text>`,
    );
  if (spec.yLabel)
    parts.push(
      `<text x="16" y="${(m.top + h - m.bottom) / 2}" text-anchor="middle" transform="rotate(-90 16 ${(m.top + h - m.bottom) / 2})">${esc(spec.yLabel)}</text>`,
    );
  parts.push("</svg>");
  return parts.join("\n");
}
