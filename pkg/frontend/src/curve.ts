// minimal learning-curve plot (success rate vs environment step)

import type { CurvePoint } from "./types.js";

export function drawCurve(ctx: CanvasRenderingContext2D, w: number, h: number,
  curve: CurvePoint[]): void {
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  ctx.fillStyle = "#888";
  ctx.font = "10px sans-serif";
  for (const frac of [0, 0.5, 1]) {
    const y = pad + (1 - frac) * (h - 2 * pad);
    ctx.fillText(frac.toFixed(1), 2, y + 3);
  }
  if (curve.length === 0) return;
  const maxStep = Math.max(...curve.map((p) => p.step), 1);
  ctx.strokeStyle = "#4fc3f7";
  ctx.lineWidth = 2;
  ctx.beginPath();
  curve.forEach((p, i) => {
    const x = pad + (p.step / maxStep) * (w - 2 * pad);
    const y = pad + (1 - p.eval_success) * (h - 2 * pad);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  const last = curve[curve.length - 1];
  ctx.fillStyle = "#eee";
  ctx.fillText(`step ${last.step}  success ${last.eval_success.toFixed(2)}`, pad, 12);
}

const pad = 16;
