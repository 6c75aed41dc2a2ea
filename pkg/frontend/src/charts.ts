// SVG builders for the dashboard. Everything here is string-in, string-out:
// the numbers drawn are exactly the numbers handed in, so a rendered chart
// is traceable to the service payload that fed it.

export const EXCITE_COLOR = "#b2182b";
export const INHIBIT_COLOR = "#2166ac";
export const NEUTRAL_COLOR = "#f7f7f7";
export const UNDEFINED_COLOR = "#d4d4d8";

const OPINION_COLORS = [
  "#4c78a8", "#f58518", "#54a24b", "#b279a2",
  "#e45756", "#72b7b2", "#eeca3b", "#9d755d",
];

export function opinionColor(i: number): string {
  return OPINION_COLORS[i % OPINION_COLORS.length];
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** v=0 maps to the exact midpoint of the range. */
export function linScale(
  domain: [number, number],
  range: [number, number],
): (v: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  return (v) => (span === 0 ? (r0 + r1) / 2 : r0 + ((v - d0) / span) * (r1 - r0));
}

/**
 * Diverging color for an elasticity or a percent change: positive values
 * blend toward the exciting red, negative toward the inhibiting blue, zero
 * is the neutral midpoint. vmax fixes the saturation point.
 */
export function divergingColor(v: number, vmax: number): string {
  if (v === 0 || vmax <= 0) return NEUTRAL_COLOR;
  const t = Math.min(1, Math.abs(v) / vmax);
  const target = v > 0 ? EXCITE_COLOR : INHIBIT_COLOR;
  return blend(NEUTRAL_COLOR, target, t);
}

function blend(from: string, to: string, t: number): string {
  const a = hex(from);
  const b = hex(to);
  const c = a.map((x, i) => Math.round(x + (b[i] - x) * t));
  return `#${c.map((x) => x.toString(16).padStart(2, "0")).join("")}`;
}

function hex(color: string): number[] {
  return [1, 3, 5].map((i) => parseInt(color.slice(i, i + 2), 16));
}

/**
 * Cumulative band bounds for a stacked area: row m is the running sum of
 * the first m series. Row 0 is all zeros; the last row is the per-bin
 * total, which for shares on the simplex is 1 in every bin.
 */
export function stackedBands(series: number[][]): number[][] {
  const T = series.length ? series[0].length : 0;
  const bands: number[][] = [new Array(T).fill(0)];
  for (const row of series) {
    const prev = bands[bands.length - 1];
    bands.push(row.map((v, t) => prev[t] + v));
  }
  return bands;
}

function bandPath(
  lower: number[],
  upper: number[],
  x: (i: number) => number,
  y: (v: number) => number,
): string {
  const fwd = upper.map((v, i) => `${x(i).toFixed(2)},${y(v).toFixed(2)}`);
  const back = lower
    .map((v, i) => `${x(i).toFixed(2)},${y(v).toFixed(2)}`)
    .reverse();
  return `M${fwd.join("L")}L${back.join("L")}Z`;
}

/** Polyline segments with gaps at null bins. */
export function brokenLinePath(
  values: (number | null)[],
  x: (i: number) => number,
  y: (v: number) => number,
): string {
  const parts: string[] = [];
  let pen = false;
  values.forEach((v, i) => {
    if (v === null || !Number.isFinite(v)) {
      pen = false;
      return;
    }
    const pt = `${x(i).toFixed(2)},${y(v).toFixed(2)}`;
    parts.push(`${pen ? "L" : "M"}${pt}`);
    pen = true;
  });
  return parts.join("");
}

export interface StackedAreaOptions {
  title: string;
  startBin: number;
  shares: number[][]; // [opinion][bin], simplex per bin
  labels: string[];
  realized?: (number | null)[][]; // overlay lines, gaps at null
  width?: number;
  height?: number;
}

/** 100% stacked share areas for one platform, optional realized overlay. */
export function stackedAreaSvg(opts: StackedAreaOptions): string {
  const width = opts.width ?? 560;
  const height = opts.height ?? 180;
  const pad = { left: 42, right: 10, top: 24, bottom: 22 };
  const T = opts.shares.length ? opts.shares[0].length : 0;
  const x = linScale([0, Math.max(1, T - 1)], [pad.left, width - pad.right]);
  const y = linScale([0, 1], [height - pad.bottom, pad.top]);
  const bands = stackedBands(opts.shares);

  const areas = opts.shares
    .map((_, m) => {
      const d = bandPath(bands[m], bands[m + 1], x, y);
      const label = escapeXml(opts.labels[m] ?? `series ${m}`);
      return `<path d="${d}" fill="${opinionColor(m)}" fill-opacity="0.82">` +
        `<title>${label}</title></path>`;
    })
    .join("");

  const overlay = (opts.realized ?? [])
    .map((row, m) => {
      const d = brokenLinePath(row, x, y);
      if (!d) return "";
      return `<path d="${d}" fill="none" stroke="#18181b" stroke-width="1.1" ` +
        `stroke-dasharray="3 2" opacity="0.75">` +
        `<title>${escapeXml(opts.labels[m] ?? "")} realized</title></path>`;
    })
    .join("");

  const yTicks = [0, 0.5, 1]
    .map((v) => {
      const yy = y(v).toFixed(2);
      return `<line x1="${pad.left}" x2="${width - pad.right}" y1="${yy}" y2="${yy}" ` +
        `stroke="#e4e4e7" stroke-width="1"/>` +
        `<text x="${pad.left - 6}" y="${yy}" class="tick" text-anchor="end" ` +
        `dominant-baseline="middle">${v * 100}%</text>`;
    })
    .join("");

  const xTickCount = Math.min(6, T);
  const xTicks = Array.from({ length: xTickCount }, (_, i) => {
    const t = Math.round((i * (T - 1)) / Math.max(1, xTickCount - 1));
    return `<text x="${x(t).toFixed(2)}" y="${height - 6}" class="tick" ` +
      `text-anchor="middle">${opts.startBin + t}</text>`;
  }).join("");

  return `<svg viewBox="0 0 ${width} ${height}" class="chart stacked-area" ` +
    `role="img" aria-label="${escapeXml(opts.title)}">` +
    `<text x="${pad.left}" y="15" class="chart-title">${escapeXml(opts.title)}</text>` +
    yTicks + areas + overlay + xTicks +
    `</svg>`;
}

export interface HeatmapOptions {
  title: string;
  values: (number | null)[][];
  coverage?: number[][];
  rowLabels: string[];
  colLabels: string[];
  cell?: number;
}

/**
 * Diverging heatmap: red cells excite (positive), blue inhibit (negative),
 * undefined cells are flat gray. Cell tooltips carry the exact value and
 * window coverage.
 */
export function heatmapSvg(opts: HeatmapOptions): string {
  const cell = opts.cell ?? 34;
  const rows = opts.values.length;
  const cols = rows ? opts.values[0].length : 0;
  const labelW = 10 + 7 * Math.max(0, ...opts.rowLabels.map((l) => l.length));
  const labelH = 12 + 6 * Math.max(0, ...opts.colLabels.map((l) => l.length));
  const width = labelW + cols * cell + 10;
  const height = labelH + rows * cell + 28;
  const vmax = Math.max(
    1e-12,
    ...opts.values.flat().map((v) => (v === null ? 0 : Math.abs(v))),
  );

  const cells: string[] = [];
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      const v = opts.values[i][j];
      const cov = opts.coverage?.[i]?.[j];
      const fill = v === null ? UNDEFINED_COLOR : divergingColor(v, vmax);
      const cls = v === null ? "cell cell-undefined" : "cell";
      const covTxt = cov === undefined ? "" : `, coverage ${(cov * 100).toFixed(0)}%`;
      const title = `${opts.rowLabels[i]} / ${opts.colLabels[j]}: ` +
        `${v === null ? "undefined" : v.toFixed(4)}${covTxt}`;
      cells.push(
        `<rect class="${cls}" x="${labelW + j * cell}" y="${labelH + i * cell}" ` +
          `width="${cell - 2}" height="${cell - 2}" rx="3" fill="${fill}">` +
          `<title>${escapeXml(title)}</title></rect>`,
      );
    }
  }

  const rowText = opts.rowLabels
    .map((l, i) =>
      `<text x="${labelW - 6}" y="${labelH + i * cell + cell / 2 - 1}" class="tick" ` +
      `text-anchor="end" dominant-baseline="middle">${escapeXml(l)}</text>`)
    .join("");
  const colText = opts.colLabels
    .map((l, j) =>
      `<text x="${labelW + j * cell + cell / 2 - 1}" y="${labelH - 8}" class="tick" ` +
      `text-anchor="start" transform="rotate(-35 ${labelW + j * cell + cell / 2 - 1} ${labelH - 8})">` +
      `${escapeXml(l)}</text>`)
    .join("");

  const legendY = labelH + rows * cell + 14;
  const legend =
    `<rect x="${labelW}" y="${legendY - 8}" width="10" height="10" fill="${EXCITE_COLOR}"/>` +
    `<text x="${labelW + 14}" y="${legendY}" class="tick">exciting</text>` +
    `<rect x="${labelW + 78}" y="${legendY - 8}" width="10" height="10" fill="${INHIBIT_COLOR}"/>` +
    `<text x="${labelW + 92}" y="${legendY}" class="tick">inhibiting</text>`;

  return `<svg viewBox="0 0 ${width} ${height}" class="chart heatmap" role="img" ` +
    `aria-label="${escapeXml(opts.title)}">` +
    `<text x="2" y="14" class="chart-title">${escapeXml(opts.title)}</text>` +
    colText + rowText + cells.join("") + legend +
    `</svg>`;
}

export interface ChangeBarsOptions {
  values: (number | null)[];
  low?: (number | null)[];
  high?: (number | null)[];
  labels: string[];
  width?: number;
  unit?: string;
}

/**
 * Horizontal percent-change bars around a zero axis with optional
 * low..high whisker segments straight from the payload.
 */
export function changeBarsSvg(opts: ChangeBarsOptions): string {
  const width = opts.width ?? 320;
  const rowH = 26;
  const pad = { left: 8, right: 52, top: 6, bottom: 6 };
  const height = pad.top + pad.bottom + rowH * opts.values.length;
  const unit = opts.unit ?? "%";

  const finite: number[] = [];
  for (const arr of [opts.values, opts.low ?? [], opts.high ?? []]) {
    for (const v of arr) if (v !== null && Number.isFinite(v)) finite.push(v);
  }
  const vmax = Math.max(1e-9, ...finite.map(Math.abs));
  const x = linScale([-vmax, vmax], [pad.left, width - pad.right]);
  const x0 = x(0);

  const rows = opts.values
    .map((v, i) => {
      const yMid = pad.top + i * rowH + rowH / 2;
      const label = escapeXml(opts.labels[i] ?? `row ${i}`);
      if (v === null || !Number.isFinite(v)) {
        return `<text x="${x0 + 6}" y="${yMid}" class="tick" ` +
          `dominant-baseline="middle">${label}: n/a</text>`;
      }
      const xv = x(v);
      const barX = Math.min(x0, xv);
      const barW = Math.abs(xv - x0);
      const fill = v > 0 ? EXCITE_COLOR : v < 0 ? INHIBIT_COLOR : NEUTRAL_COLOR;
      const lo = opts.low?.[i];
      const hi = opts.high?.[i];
      const whisker =
        lo !== null && lo !== undefined && hi !== null && hi !== undefined &&
        Number.isFinite(lo) && Number.isFinite(hi)
          ? `<line class="whisker" x1="${x(lo).toFixed(2)}" x2="${x(hi).toFixed(2)}" ` +
            `y1="${yMid}" y2="${yMid}" stroke="#3f3f46" stroke-width="1.4"/>` +
            `<line x1="${x(lo).toFixed(2)}" x2="${x(lo).toFixed(2)}" y1="${yMid - 4}" ` +
            `y2="${yMid + 4}" stroke="#3f3f46" stroke-width="1.4"/>` +
            `<line x1="${x(hi).toFixed(2)}" x2="${x(hi).toFixed(2)}" y1="${yMid - 4}" ` +
            `y2="${yMid + 4}" stroke="#3f3f46" stroke-width="1.4"/>`
          : "";
      return `<rect class="bar" x="${barX.toFixed(2)}" y="${yMid - 8}" ` +
        `width="${barW.toFixed(2)}" height="16" fill="${fill}" fill-opacity="0.85">` +
        `<title>${label}: ${v.toFixed(2)}${unit}</title></rect>` +
        whisker +
        `<text x="${pad.left}" y="${yMid}" class="bar-label" ` +
        `dominant-baseline="middle">${label}</text>` +
        `<text x="${width - 4}" y="${yMid}" class="bar-value" text-anchor="end" ` +
        `dominant-baseline="middle">${v.toFixed(2)}${unit}</text>`;
    })
    .join("");

  return `<svg viewBox="0 0 ${width} ${height}" class="chart change-bars" role="img">` +
    `<line x1="${x0}" x2="${x0}" y1="${pad.top}" y2="${height - pad.bottom}" ` +
    `stroke="#a1a1aa" stroke-width="1"/>` +
    rows +
    `</svg>`;
}

/** Small filled line for platform volume under each share chart. */
export function sparklineSvg(values: number[], width = 560, height = 46): string {
  const pad = { left: 42, right: 10, top: 6, bottom: 6 };
  const T = values.length;
  const vmax = Math.max(1e-9, ...values);
  const x = linScale([0, Math.max(1, T - 1)], [pad.left, width - pad.right]);
  const y = linScale([0, vmax], [height - pad.bottom, pad.top]);
  const d = brokenLinePath(values, x, y);
  const base = `${x(T - 1).toFixed(2)},${y(0).toFixed(2)}L${x(0).toFixed(2)},${y(0).toFixed(2)}`;
  return `<svg viewBox="0 0 ${width} ${height}" class="chart sparkline" role="img">` +
    `<path d="${d}L${base}Z" fill="#a1a1aa" fill-opacity="0.25" stroke="none"/>` +
    `<path d="${d}" fill="none" stroke="#52525b" stroke-width="1.2"/>` +
    `<text x="${pad.left - 6}" y="${height / 2}" class="tick" text-anchor="end" ` +
    `dominant-baseline="middle">volume</text>` +
    `</svg>`;
}
