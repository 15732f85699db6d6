// Paints stroke records onto a 2d context.  Rendering only; the records
// themselves are the source of truth.

import type { StrokeRecordWire } from "./types.js";

export function drawStroke(ctx: CanvasRenderingContext2D, stroke: StrokeRecordWire): void {
  const xs = stroke.x_coordinates;
  const ys = stroke.y_coordinates;
  if (xs.length === 0) return;
  ctx.save();
  ctx.globalAlpha = stroke.opacity;
  ctx.strokeStyle = stroke.color;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  if (xs.length === 1) {
    ctx.fillStyle = stroke.color;
    ctx.beginPath();
    ctx.arc(xs[0], ys[0], stroke.thickness_values[0] / 2, 0, Math.PI * 2);
    ctx.fill();
    ctx.restore();
    return;
  }
  for (let i = 1; i < xs.length; i++) {
    ctx.beginPath();
    ctx.lineWidth = (stroke.thickness_values[i - 1] + stroke.thickness_values[i]) / 2;
    ctx.moveTo(xs[i - 1], ys[i - 1]);
    ctx.lineTo(xs[i], ys[i]);
    ctx.stroke();
  }
  ctx.restore();
}

export function redraw(
  ctx: CanvasRenderingContext2D,
  strokes: StrokeRecordWire[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  for (const stroke of strokes) {
    drawStroke(ctx, stroke);
  }
}
