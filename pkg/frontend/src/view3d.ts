// orthographic turntable projection of 3D polylines, no external renderer

import type { Point3 } from "./types.js";

export interface Turntable {
  yaw: number; // radians around +z
  pitch: number; // radians above the horizontal plane
}

export interface Box3 {
  min: Point3;
  max: Point3;
}

/** Project workspace points to normalized [0,1]^2 screen coordinates. */
export function projectTurntable(points: Point3[], box: Box3, view: Turntable,
): [number, number][] {
  const c = [0, 1, 2].map((i) => (box.min[i] + box.max[i]) / 2);
  const span = Math.max(...[0, 1, 2].map((i) => box.max[i] - box.min[i])) || 1;
  const cy = Math.cos(view.yaw);
  const sy = Math.sin(view.yaw);
  const cp = Math.cos(view.pitch);
  const sp = Math.sin(view.pitch);
  return points.map(([x, y, z]) => {
    const dx = x - c[0];
    const dy = y - c[1];
    const dz = z - c[2];
    // yaw about z, then pitch the camera; screen keeps x-right, z-up
    const rx = cy * dx + sy * dy;
    const ry = -sy * dx + cy * dy;
    const sxy = rx;
    const sz = cp * dz - sp * ry;
    return [0.5 + (sxy / span) * 0.9, 0.5 - (sz / span) * 0.9];
  });
}

const PALETTE = ["#ffd54f", "#4fc3f7", "#aed581", "#f06292", "#ba68c8",
  "#ff8a65", "#90a4ae", "#dce775", "#4db6ac", "#a1887f"];

export function sampleColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

export function drawPolylines(ctx: CanvasRenderingContext2D, size: number,
  polylines: [number, number][][], colors: string[]): void {
  ctx.clearRect(0, 0, size, size);
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, size, size);
  polylines.forEach((line, i) => {
    if (line.length < 2) return;
    ctx.strokeStyle = colors[i] ?? sampleColor(i);
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(line[0][0] * size, line[0][1] * size);
    for (const [u, v] of line.slice(1)) ctx.lineTo(u * size, v * size);
    ctx.stroke();
    // start / end markers mirror the sketch convention
    ctx.fillStyle = "#2e7d32";
    ctx.beginPath();
    ctx.arc(line[0][0] * size, line[0][1] * size, 4, 0, Math.PI * 2);
    ctx.fill();
    const end = line[line.length - 1];
    ctx.fillStyle = "#c62828";
    ctx.beginPath();
    ctx.arc(end[0] * size, end[1] * size, 4, 0, Math.PI * 2);
    ctx.fill();
  });
}
