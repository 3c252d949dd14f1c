// Canvas renderer: workspace, predicates (original fill + resized outline),
// executed path solid, planned path dashed, critical point marker, pending
// operator edits dashed, and a robustness sparkline.
import type { WorldView } from "./state.js";
import { polygonFromHalfspaces, type Point } from "./geometry.js";

// The subset of CanvasRenderingContext2D the renderer touches; tests supply a
// recording stub, the browser supplies the real thing.
export interface Canvas2DLike {
  canvas: { width: number; height: number };
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
}

export interface Viewport {
  toPx(p: Point): Point;
  scale: number;
}

const COLORS = {
  safe: "#2a9d3a",
  unsafe: "#d63230",
  executed: "#1f6fd6",
  plan: "#1f6fd6",
  planWarning: "#e8881c",
  pending: "#7a5cc0",
  critical: "#111111",
  frame: "#333333",
};

export function makeViewport(view: WorldView, width: number, height: number): Viewport {
  const ws = view.scenario?.workspace;
  const [lx, ly] = ws ? [ws.lower[0], ws.lower[1]] : [0, 0];
  const [hx, hy] = ws ? [ws.upper[0], ws.upper[1]] : [10, 10];
  const margin = 24;
  const scale = Math.min(
    (width - 2 * margin) / Math.max(hx - lx, 1e-9),
    (height - 2 * margin) / Math.max(hy - ly, 1e-9),
  );
  return {
    scale,
    toPx: ([x, y]) => [margin + (x - lx) * scale, height - margin - (y - ly) * scale],
  };
}

function tracePolygon(ctx: Canvas2DLike, vp: Viewport, poly: Point[]): void {
  if (poly.length === 0) return;
  ctx.beginPath();
  const [x0, y0] = vp.toPx(poly[0]);
  ctx.moveTo(x0, y0);
  for (const p of poly.slice(1)) {
    const [x, y] = vp.toPx(p);
    ctx.lineTo(x, y);
  }
  ctx.closePath();
}

function tracePolyline(ctx: Canvas2DLike, vp: Viewport, pts: number[][]): void {
  if (pts.length === 0) return;
  ctx.beginPath();
  const [x0, y0] = vp.toPx([pts[0][0], pts[0][1]]);
  ctx.moveTo(x0, y0);
  for (const p of pts.slice(1)) {
    const [x, y] = vp.toPx([p[0], p[1]]);
    ctx.lineTo(x, y);
  }
}

export function render(view: WorldView, ctx: Canvas2DLike): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (!view.scenario) {
    ctx.fillStyle = COLORS.frame;
    ctx.fillText("waiting for snapshot...", 16, 24);
    return;
  }
  const vp = makeViewport(view, width, height);
  const scenario = view.scenario;

  // workspace frame
  const ws = scenario.workspace;
  ctx.save();
  ctx.strokeStyle = COLORS.frame;
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  tracePolygon(ctx, vp, [
    [ws.lower[0], ws.lower[1]],
    [ws.upper[0], ws.lower[1]],
    [ws.upper[0], ws.upper[1]],
    [ws.lower[0], ws.upper[1]],
  ]);
  ctx.stroke();

  // predicates: original geometry filled, resized outline dashed
  for (const occ of scenario.occurrences) {
    const pred = scenario.predicates[occ.name];
    if (!pred) continue;
    const color = COLORS[occ.polarity];
    const poly = polygonFromHalfspaces(pred.A, pred.b);
    if (poly.length) {
      ctx.globalAlpha = 0.3;
      ctx.fillStyle = color;
      tracePolygon(ctx, vp, poly);
      ctx.fill();
      ctx.globalAlpha = 1.0;
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.6;
      tracePolygon(ctx, vp, poly);
      ctx.stroke();
      const labelAt = vp.toPx(poly[0]);
      ctx.fillStyle = color;
      ctx.fillText(occ.name, labelAt[0] + 4, labelAt[1] - 4);
    }
    const resized = polygonFromHalfspaces(pred.A, occ.resized_b);
    if (resized.length) {
      ctx.setLineDash([6, 4]);
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.0;
      tracePolygon(ctx, vp, resized);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  // executed path: solid
  ctx.strokeStyle = COLORS.executed;
  ctx.lineWidth = 2.2;
  ctx.setLineDash([]);
  tracePolyline(ctx, vp, view.executed);
  ctx.stroke();

  // planned suffix: dashed, warning color when the incumbent is infeasible
  if (view.plan && view.plan.length > view.executed.length) {
    const suffix = view.plan.slice(Math.max(view.executed.length - 1, 0));
    const infeasible = view.lastStep !== null && view.lastStep.status !== "feasible";
    ctx.strokeStyle = infeasible ? COLORS.planWarning : COLORS.plan;
    ctx.lineWidth = 1.4;
    ctx.setLineDash([5, 5]);
    tracePolyline(ctx, vp, suffix);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // critical point marker when the incumbent violates the formula
  const last = view.lastStep;
  if (
    last &&
    last.robustness !== null &&
    last.robustness < 0 &&
    last.critical_index !== null &&
    view.plan &&
    last.critical_index < view.plan.length
  ) {
    const p = view.plan[last.critical_index];
    const [x, y] = vp.toPx([p[0], p[1]]);
    ctx.strokeStyle = COLORS.critical;
    ctx.lineWidth = 2.4;
    ctx.beginPath();
    ctx.moveTo(x - 6, y - 6);
    ctx.lineTo(x + 6, y + 6);
    ctx.moveTo(x - 6, y + 6);
    ctx.lineTo(x + 6, y - 6);
    ctx.stroke();
  }

  // operator edits not yet acknowledged: dashed purple
  for (const edit of view.pendingEdits) {
    if (!edit.vertices) continue;
    ctx.strokeStyle = COLORS.pending;
    ctx.lineWidth = 1.4;
    ctx.setLineDash([3, 3]);
    tracePolygon(ctx, vp, edit.vertices);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  drawSparkline(view, ctx);
  drawStatusLine(view, ctx);
  ctx.restore();
}

function drawSparkline(view: WorldView, ctx: Canvas2DLike): void {
  const history = view.robustnessHistory.filter((h) => h.value !== null);
  if (history.length === 0) return;
  const { width } = ctx.canvas;
  const w = Math.min(180, width - 32);
  const h = 36;
  const x0 = width - w - 12;
  const y0 = 12;
  const values = history.map((p) => p.value as number);
  const vmax = Math.max(...values, 0.1);
  const vmin = Math.min(...values, -0.1);
  const sx = w / Math.max(history.length - 1, 1);
  const sy = h / (vmax - vmin);
  ctx.strokeStyle = COLORS.frame;
  ctx.lineWidth = 1;
  ctx.beginPath();
  const zeroY = y0 + (vmax - 0) * sy;
  ctx.moveTo(x0, zeroY);
  ctx.lineTo(x0 + w, zeroY);
  ctx.stroke();
  ctx.strokeStyle =
    values[values.length - 1] >= 0 ? COLORS.safe : COLORS.unsafe;
  ctx.beginPath();
  history.forEach((pt, i) => {
    const x = x0 + i * sx;
    const y = y0 + (vmax - (pt.value as number)) * sy;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = COLORS.frame;
  ctx.fillText(`rho ${values[values.length - 1].toFixed(3)}`, x0, y0 + h + 12);
}

function drawStatusLine(view: WorldView, ctx: Canvas2DLike): void {
  ctx.fillStyle = COLORS.frame;
  const bits = [
    view.scenario ? view.scenario.name : "",
    `step ${view.step}`,
    view.paused ? "paused" : `speed x${view.speed}`,
    view.done ? `done (${view.finalStatus})` : "",
    view.lastStep ? view.lastStep.status : "",
  ].filter(Boolean);
  ctx.fillText(bits.join("  |  "), 12, ctx.canvas.height - 8);
}
