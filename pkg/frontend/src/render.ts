import { LerRecord, SchemaError } from "./csv.js";

export type FigureKind = "LER_VS_P" | "LER_VS_ITERATIONS";

export interface PlotSpec {
  kind: FigureKind;
  groupBy: (keyof LerRecord)[];
  title?: string;
}

const WIDTH = 760;
const HEIGHT = 520;
const MARGIN = { left: 78, right: 210, top: 46, bottom: 64 };

const COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf",
];

interface Series {
  label: string;
  dashed: boolean;
  color: string;
  points: { x: number; y: number; lo: number; hi: number }[];
}

function groupKey(r: LerRecord, keys: (keyof LerRecord)[]): string {
  return keys.map((k) => `${k}=${r[k]}`).join(" ");
}

function isBaseline(r: LerRecord): boolean {
  return r.experiment.endsWith("_BASELINE");
}

/** Build the series list: stable group order, baselines rendered dashed. */
export function buildSeries(records: LerRecord[], spec: PlotSpec): Series[] {
  const xOf = (r: LerRecord) =>
    spec.kind === "LER_VS_P" ? r.p : r.mean_iterations;
  const groups = new Map<string, LerRecord[]>();
  for (const r of records) {
    const key = groupKey(r, spec.groupBy);
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(r);
  }
  const labels = [...groups.keys()].sort();
  return labels.map((label, i) => {
    const rows = groups
      .get(label)!
      .slice()
      .sort((a, b) => xOf(a) - xOf(b));
    return {
      label,
      dashed: rows.every(isBaseline),
      color: COLORS[i % COLORS.length],
      points: rows.map((r) => ({
        x: xOf(r),
        y: r.ler,
        lo: r.ci_low,
        hi: r.ci_high,
      })),
    };
  });
}

interface Scale {
  toPixel(value: number): number;
  ticks: { value: number; label: string }[];
}

function logScale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  const safeLo = Math.max(lo, 1e-12);
  // pad the domain to whole decades so tick labels bracket the data
  const a = Math.floor(Math.log10(safeLo));
  const b = Math.max(Math.ceil(Math.log10(Math.max(hi, safeLo))), a + 1);
  const ticks: Scale["ticks"] = [];
  for (let e = a; e <= b; e += 1) {
    ticks.push({ value: 10 ** e, label: `1e${e}` });
  }
  return {
    toPixel: (v) =>
      pixLo +
      ((Math.log10(Math.max(v, 1e-12)) - a) / (b - a)) * (pixHi - pixLo),
    ticks,
  };
}

function linearScale(lo: number, hi: number, pixLo: number, pixHi: number): Scale {
  const span = hi - lo || 1;
  const step = span <= 4 ? 1 : Math.ceil(span / 5);
  const ticks: Scale["ticks"] = [];
  for (let v = Math.floor(lo); v <= Math.ceil(hi); v += step) {
    ticks.push({ value: v, label: `${v}` });
  }
  return {
    toPixel: (v) => pixLo + ((v - lo) / span) * (pixHi - pixLo),
    ticks,
  };
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Render one figure to an SVG string. */
export function renderSvg(records: LerRecord[], spec: PlotSpec): string {
  if (records.length === 0) {
    throw new SchemaError("no records to plot");
  }
  const series = buildSeries(records, spec);
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) =>
    s.points.flatMap((p) => [p.y, p.lo, p.hi].filter((v) => v > 0)));
  const plotL = MARGIN.left;
  const plotR = WIDTH - MARGIN.right;
  const plotT = MARGIN.top;
  const plotB = HEIGHT - MARGIN.bottom;

  const xScale =
    spec.kind === "LER_VS_P"
      ? logScale(Math.min(...xs), Math.max(...xs), plotL, plotR)
      : linearScale(Math.min(...xs), Math.max(...xs), plotL, plotR);
  const yLo = ys.length ? Math.min(...ys) : 1e-6;
  const yHi = ys.length ? Math.max(...ys) : 1;
  const yScale = logScale(yLo, yHi, plotB, plotT);

  const xLabel =
    spec.kind === "LER_VS_P" ? "physical error rate" : "mean iterations";
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  if (spec.title) {
    parts.push(
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" ` +
      `font-size="16" class="title">${esc(spec.title)}</text>`);
  }
  // axes
  parts.push(
    `<line x1="${plotL}" y1="${plotB}" x2="${plotR}" y2="${plotB}" ` +
    `stroke="black" class="x-axis"/>`);
  parts.push(
    `<line x1="${plotL}" y1="${plotT}" x2="${plotL}" y2="${plotB}" ` +
    `stroke="black" class="y-axis"/>`);
  for (const t of xScale.ticks) {
    const x = xScale.toPixel(t.value);
    if (x < plotL - 1 || x > plotR + 1) continue;
    parts.push(
      `<line x1="${x.toFixed(1)}" y1="${plotB}" x2="${x.toFixed(1)}" ` +
      `y2="${plotB + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${x.toFixed(1)}" y="${plotB + 20}" text-anchor="middle" ` +
      `font-size="11" class="x-tick">${t.label}</text>`);
  }
  for (const t of yScale.ticks) {
    const y = yScale.toPixel(t.value);
    if (y < plotT - 1 || y > plotB + 1) continue;
    parts.push(
      `<line x1="${plotL - 5}" y1="${y.toFixed(1)}" x2="${plotL}" ` +
      `y2="${y.toFixed(1)}" stroke="black"/>`);
    parts.push(
      `<text x="${plotL - 8}" y="${(y + 4).toFixed(1)}" text-anchor="end" ` +
      `font-size="11" class="y-tick">${t.label}</text>`);
  }
  parts.push(
    `<text x="${(plotL + plotR) / 2}" y="${HEIGHT - 18}" ` +
    `text-anchor="middle" font-size="13" class="x-label">${xLabel}</text>`);
  parts.push(
    `<text x="20" y="${(plotT + plotB) / 2}" text-anchor="middle" ` +
    `font-size="13" class="y-label" transform="rotate(-90 20 ` +
    `${(plotT + plotB) / 2})">logical error rate</text>`);

  series.forEach((s, idx) => {
    const path = s.points
      .map((p) => `${xScale.toPixel(p.x).toFixed(1)},${yScale.toPixel(p.y).toFixed(1)}`)
      .join(" ");
    const dash = s.dashed ? ` stroke-dasharray="7,5"` : "";
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${s.color}"` +
      `${dash} stroke-width="1.8" class="series${s.dashed ? " baseline" : ""}"/>`);
    for (const p of s.points) {
      const x = xScale.toPixel(p.x);
      const y = yScale.toPixel(p.y);
      if (p.lo > 0 && p.hi > 0) {
        const yLoPix = yScale.toPixel(p.lo);
        const yHiPix = yScale.toPixel(p.hi);
        parts.push(
          `<line x1="${x.toFixed(1)}" y1="${yLoPix.toFixed(1)}" ` +
          `x2="${x.toFixed(1)}" y2="${yHiPix.toFixed(1)}" ` +
          `stroke="${s.color}" class="ci"/>`);
        for (const yy of [yLoPix, yHiPix]) {
          parts.push(
            `<line x1="${(x - 4).toFixed(1)}" y1="${yy.toFixed(1)}" ` +
            `x2="${(x + 4).toFixed(1)}" y2="${yy.toFixed(1)}" ` +
            `stroke="${s.color}"/>`);
        }
      }
      parts.push(
        `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="3" ` +
        `fill="${s.color}"/>`);
    }
    const ly = plotT + 16 * idx;
    const lx = plotR + 12;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" ` +
      `stroke="${s.color}"${dash} stroke-width="1.8"/>`);
    parts.push(
      `<text x="${lx + 32}" y="${ly + 4}" font-size="11" ` +
      `class="legend">${esc(s.label)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n");
}
