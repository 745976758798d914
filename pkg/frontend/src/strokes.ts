// stroke capture model; coordinates are normalized to [0,1]^2 so canvas size
// never changes what the server sees

import type { Point2 } from "./types.js";

const MIN_SAMPLE_DIST = 0.004; // normalized units; thins pointer-move floods

export class StrokeState {
  strokes: Point2[][] = [];
  private active: Point2[] | null = null;

  beginStroke(u: number, v: number): void {
    this.active = [clampPoint(u, v)];
    this.strokes.push(this.active);
  }

  extendStroke(u: number, v: number): void {
    if (!this.active) return;
    const p = clampPoint(u, v);
    const last = this.active[this.active.length - 1];
    if (Math.hypot(p[0] - last[0], p[1] - last[1]) >= MIN_SAMPLE_DIST) {
      this.active.push(p);
    }
  }

  endStroke(): void {
    if (this.active && this.active.length < 2) {
      // a bare click carries no direction; drop it
      this.strokes.pop();
    }
    this.active = null;
  }

  undo(): void {
    this.endStroke();
    this.strokes.pop();
  }

  clear(): void {
    this.strokes = [];
    this.active = null;
  }

  hasInk(): boolean {
    return this.strokes.some((s) => s.length >= 2);
  }
}

export function clampPoint(u: number, v: number): Point2 {
  return [Math.min(1, Math.max(0, u)), Math.min(1, Math.max(0, v))];
}
