/** Line charts for the per-round history. Series values are taken verbatim
 * from the metrics payload; nothing is recomputed client-side.
 */

import type { RoundDoc } from "./types.js";

export interface SeriesPoint {
  x: number;
  y: number;
}

export function metricsToSeries(
  metrics: RoundDoc[],
  key: "accuracy" | "ece",
): SeriesPoint[] {
  return metrics.map((rec) => ({ x: rec.labeled_count, y: rec[key] }));
}

const PAD_LEFT = 46;
const PAD_BOTTOM = 26;
const PAD_TOP = 12;
const PAD_RIGHT = 12;

function niceTicks(lo: number, hi: number, count: number): number[] {
  if (hi <= lo) return [lo];
  const step = (hi - lo) / count;
  const ticks: number[] = [];
  for (let i = 0; i <= count; i++) ticks.push(lo + i * step);
  return ticks;
}

/** Draw one series as a polyline with axes and tick labels. */
export function drawLineChart(
  canvas: HTMLCanvasElement,
  points: SeriesPoint[],
  title: string,
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.font = "12px system-ui, sans-serif";
  ctx.fillStyle = "#555";
  ctx.fillText(title, PAD_LEFT, PAD_TOP);

  if (points.length === 0) {
    ctx.fillText("no rounds completed yet", PAD_LEFT, h / 2);
    return;
  }

  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  const ySpan = yHi - yLo || Math.abs(yHi) || 1;
  const yPad = ySpan * 0.1;
  const y0 = yLo - yPad;
  const y1 = yHi + yPad;

  const plotW = w - PAD_LEFT - PAD_RIGHT;
  const plotH = h - PAD_TOP - PAD_BOTTOM;
  const toX = (x: number) =>
    PAD_LEFT + (xHi === xLo ? plotW / 2 : ((x - xLo) / (xHi - xLo)) * plotW);
  const toY = (y: number) => PAD_TOP + plotH - ((y - y0) / (y1 - y0)) * plotH;

  ctx.strokeStyle = "#ccc";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(PAD_LEFT, PAD_TOP);
  ctx.lineTo(PAD_LEFT, PAD_TOP + plotH);
  ctx.lineTo(PAD_LEFT + plotW, PAD_TOP + plotH);
  ctx.stroke();

  ctx.fillStyle = "#777";
  for (const t of niceTicks(y0, y1, 4)) {
    const y = toY(t);
    ctx.fillText(t.toFixed(3), 4, y + 4);
    ctx.strokeStyle = "#eee";
    ctx.beginPath();
    ctx.moveTo(PAD_LEFT, y);
    ctx.lineTo(PAD_LEFT + plotW, y);
    ctx.stroke();
  }
  for (const t of niceTicks(xLo, xHi, Math.min(points.length - 1, 6) || 1)) {
    ctx.fillText(String(Math.round(t)), toX(t) - 10, h - 8);
  }

  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach((p, i) => {
    if (i === 0) ctx.moveTo(toX(p.x), toY(p.y));
    else ctx.lineTo(toX(p.x), toY(p.y));
  });
  ctx.stroke();

  ctx.fillStyle = color;
  for (const p of points) {
    ctx.beginPath();
    ctx.arc(toX(p.x), toY(p.y), 3, 0, Math.PI * 2);
    ctx.fill();
  }
}
