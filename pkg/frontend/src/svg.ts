/**
 * Hand-rolled SVG builders: line panels with mean±stderr shading (optional
 * twin right axis, matching the dual-scale figures) and gridworld policy
 * maps (greedy-action arrows, stopping cells in red). Output is a pure
 * function of the inputs — no timestamps — so reruns are byte-identical.
 */

import type { Curve } from "./csv.js";
import type { Layout } from "./layout.js";

export interface Series {
  curve: Curve;
  label: string;
  color: string;
  axis?: "left" | "right";
  band?: boolean; // shade mean +/- stderr (default true)
}

export interface PanelOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  rightYLabel?: string;
  series: Series[];
  width?: number;
  height?: number;
  markers?: boolean; // draw point markers (for sparse curves)
}

const FONT = `font-family="Helvetica, Arial, sans-serif"`;

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Math.abs(v) < 1e-12 ? "0" : String(Math.round(v * 1000) / 1000);
}

function tickValues(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12; v += s) {
    ticks.push(Math.abs(v) < s / 1e6 ? 0 : v);
  }
  return ticks;
}

interface Scale {
  (v: number): number;
  lo: number;
  hi: number;
}

function makeScale(values: number[], out0: number, out1: number): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const f = ((v: number) => out0 + ((v - lo) / (hi - lo)) * (out1 - out0)) as Scale;
  f.lo = lo;
  f.hi = hi;
  return f;
}

export function linePanel(opts: PanelOpts): string {
  const W = opts.width ?? 640;
  const H = opts.height ?? 420;
  const m = { left: 62, right: opts.rightYLabel ? 62 : 24, top: 40, bottom: 48 };
  const plotW = W - m.left - m.right;
  const plotH = H - m.top - m.bottom;

  const xsAll = opts.series.flatMap((s) => s.curve.xs);
  const sx = makeScale(xsAll, m.left, m.left + plotW);
  const leftSeries = opts.series.filter((s) => (s.axis ?? "left") === "left");
  const rightSeries = opts.series.filter((s) => s.axis === "right");
  const yVals = (ss: Series[]) =>
    ss.flatMap((s) => s.curve.means.flatMap((mv, i) => [
      mv - s.curve.stderrs[i], mv + s.curve.stderrs[i]]));
  const syL = makeScale(yVals(leftSeries.length ? leftSeries : opts.series),
                        m.top + plotH, m.top);
  const syR = rightSeries.length
    ? makeScale(yVals(rightSeries), m.top + plotH, m.top)
    : syL;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="22" text-anchor="middle" font-size="15" ${FONT}>${opts.title}</text>`);

  // axes
  const x0 = m.left, x1 = m.left + plotW, y0 = m.top + plotH, y1 = m.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  if (rightSeries.length) {
    parts.push(`<line x1="${x1}" y1="${y0}" x2="${x1}" y2="${y1}" stroke="black"/>`);
  }
  for (const t of tickValues(sx.lo, sx.hi)) {
    const px = sx(t);
    if (px < x0 - 1 || px > x1 + 1) continue;
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 4}" stroke="black"/>`);
    parts.push(`<text x="${fmt(px)}" y="${y0 + 18}" text-anchor="middle" font-size="11" ${FONT}>${fmt(t)}</text>`);
  }
  for (const t of tickValues(syL.lo, syL.hi)) {
    const py = syL(t);
    parts.push(`<line x1="${x0 - 4}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="black"/>`);
    parts.push(`<text x="${x0 - 7}" y="${fmt(py + 4)}" text-anchor="end" font-size="11" ${FONT}>${fmt(t)}</text>`);
  }
  if (rightSeries.length) {
    for (const t of tickValues(syR.lo, syR.hi)) {
      const py = syR(t);
      parts.push(`<line x1="${x1}" y1="${fmt(py)}" x2="${x1 + 4}" y2="${fmt(py)}" stroke="black"/>`);
      parts.push(`<text x="${x1 + 7}" y="${fmt(py + 4)}" text-anchor="start" font-size="11" ${FONT}>${fmt(t)}</text>`);
    }
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${H - 10}" text-anchor="middle" font-size="12" ${FONT}>${opts.xLabel}</text>`);
  parts.push(`<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ${FONT} transform="rotate(-90 16 ${(y0 + y1) / 2})">${opts.yLabel}</text>`);
  if (opts.rightYLabel) {
    parts.push(`<text x="${W - 14}" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" ${FONT} transform="rotate(90 ${W - 14} ${(y0 + y1) / 2})">${opts.rightYLabel}</text>`);
  }

  // bands then lines (so lines draw on top)
  for (const s of opts.series) {
    const sy = (s.axis ?? "left") === "left" ? syL : syR;
    const { xs, means, stderrs } = s.curve;
    if ((s.band ?? true) && stderrs.some((e) => e > 0)) {
      const upper = xs.map((x, i) => `${fmt(sx(x))},${fmt(sy(means[i] + stderrs[i]))}`);
      const lower = xs.map((x, i) => `${fmt(sx(x))},${fmt(sy(means[i] - stderrs[i]))}`).reverse();
      parts.push(`<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${s.color}" fill-opacity="0.18" stroke="none"/>`);
    }
  }
  for (const s of opts.series) {
    const sy = (s.axis ?? "left") === "left" ? syL : syR;
    const pts = s.curve.xs.map((x, i) => `${fmt(sx(x))},${fmt(sy(s.curve.means[i]))}`);
    parts.push(`<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" stroke-width="1.6"/>`);
    if (opts.markers) {
      for (let i = 0; i < s.curve.xs.length; i++) {
        parts.push(`<circle cx="${fmt(sx(s.curve.xs[i]))}" cy="${fmt(sy(s.curve.means[i]))}" r="3" fill="${s.color}"/>`);
      }
    }
  }

  // legend
  opts.series.forEach((s, i) => {
    const ly = m.top + 14 + 16 * i;
    const lx = m.left + 10;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" stroke="${s.color}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 28}" y="${ly + 4}" font-size="11" ${FONT}>${s.label}${s.axis === "right" ? " (right scale)" : ""}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}

// ---------------------------------------------------------------------------
// policy / stopping maps
// ---------------------------------------------------------------------------

export interface MapOpts {
  title: string;
  layout: Layout;
  greedy: Map<number, number>; // state index -> action (0 up, 1 down, 2 left, 3 right)
  stop: Map<number, number>;   // state index -> 0/1
  cell?: number;               // pixel size per cell
}

const CELL_FILL: Record<string, string> = {
  wall: "#444444",
  open: "#ffffff",
  start: "#ffffff",
  goal: "#cdeccd",
  penalty: "#c9c9c9",
  hallway: "#ffffff",
};

/** Arrow path for an action, centered in a unit cell (scaled by `c`). */
function arrow(action: number, cx: number, cy: number, c: number): string {
  const r = c * 0.28;
  const head: Record<number, [number, number, number, number]> = {
    0: [cx, cy - r, cx, cy + r], // up: tip above
    1: [cx, cy + r, cx, cy - r],
    2: [cx - r, cy, cx + r, cy], // left: tip to the left
    3: [cx + r, cy, cx - r, cy],
  };
  const [tx, ty, bx, by] = head[action];
  const wing = c * 0.12;
  const dx = Math.sign(tx - bx), dy = Math.sign(ty - by);
  // perpendicular offsets for the arrowhead wings
  const px = dy !== 0 ? wing : 0;
  const py = dx !== 0 ? wing : 0;
  const hx = tx - dx * wing * 1.4, hy = ty - dy * wing * 1.4;
  return (
    `<line x1="${fmt(bx)}" y1="${fmt(by)}" x2="${fmt(tx)}" y2="${fmt(ty)}" stroke="black" stroke-width="1.4"/>` +
    `<polygon points="${fmt(tx)},${fmt(ty)} ${fmt(hx + px)},${fmt(hy + py)} ${fmt(hx - px)},${fmt(hy - py)}" fill="black"/>`
  );
}

export function policyMap(opts: MapOpts): string {
  const c = opts.cell ?? 34;
  const { layout } = opts;
  const W = layout.width * c + 20;
  const H = layout.height * c + 46;
  const ox = 10, oy = 36;
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="20" text-anchor="middle" font-size="14" ${FONT}>${opts.title}</text>`);
  const indexOf = new Map<string, number>();
  opts.layout.cells.forEach(([r, cc], i) => indexOf.set(`${r},${cc}`, i));
  for (let r = 0; r < layout.height; r++) {
    for (let col = 0; col < layout.width; col++) {
      const kind = layout.grid[r][col];
      const x = ox + col * c, y = oy + r * c;
      const s = indexOf.get(`${r},${col}`);
      const stopped = s !== undefined && opts.stop.get(s) === 1;
      const fill = stopped ? "#e86a6a" : CELL_FILL[kind];
      parts.push(`<rect x="${x}" y="${y}" width="${c}" height="${c}" fill="${fill}" stroke="#888" stroke-width="0.6"/>`);
      if (kind === "goal") {
        parts.push(`<text x="${x + c / 2}" y="${y + c / 2 + 5}" text-anchor="middle" font-size="${c * 0.5}" ${FONT}>G</text>`);
        continue;
      }
      if (kind === "start") {
        parts.push(`<text x="${x + c * 0.22}" y="${y + c * 0.36}" font-size="${c * 0.3}" ${FONT}>S</text>`);
      }
      if (s !== undefined && !stopped) {
        const a = opts.greedy.get(s);
        if (a !== undefined) parts.push(arrow(a, x + c / 2, y + c / 2, c));
      }
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}

/** Lay finished panels out in a row (grid maps next to curve panels). */
export function rowOfPanels(svgs: string[], gap = 12): string {
  const dims = svgs.map((s) => {
    const mw = s.match(/width="(\d+(?:\.\d+)?)"/);
    const mh = s.match(/height="(\d+(?:\.\d+)?)"/);
    if (!mw || !mh) throw new Error("panel missing width/height");
    return [Number(mw[1]), Number(mh[1])] as const;
  });
  const W = dims.reduce((acc, [w]) => acc + w, 0) + gap * (svgs.length - 1);
  const H = Math.max(...dims.map(([, h]) => h));
  const parts = [`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`];
  let x = 0;
  svgs.forEach((s, i) => {
    const inner = s.replace(/^<svg[^>]*>/, "").replace(/<\/svg>\s*$/, "");
    parts.push(`<g transform="translate(${x} 0)">${inner}</g>`);
    x += dims[i][0] + gap;
  });
  parts.push("</svg>");
  return parts.join("\n");
}
