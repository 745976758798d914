// canvas sketch pad: background scene image, live stroke rendering, overlays

import { StrokeState } from "./strokes.js";
import type { Point2 } from "./types.js";
import { sampleColor } from "./view3d.js";

export class SketchPad {
  readonly state = new StrokeState();
  private background: HTMLImageElement | null = null;
  private overlays: Point2[][] = [];
  private ctx: CanvasRenderingContext2D;

  constructor(
    private canvas: HTMLCanvasElement,
    private onInkChange: () => void,
  ) {
    this.ctx = canvas.getContext("2d")!;
    canvas.addEventListener("pointerdown", (e) => {
      canvas.setPointerCapture(e.pointerId);
      const [u, v] = this.toNormalized(e);
      this.state.beginStroke(u, v);
      this.render();
    });
    canvas.addEventListener("pointermove", (e) => {
      if (e.buttons === 0) return;
      const [u, v] = this.toNormalized(e);
      this.state.extendStroke(u, v);
      this.render();
    });
    const finish = () => {
      this.state.endStroke();
      this.render();
      this.onInkChange();
    };
    canvas.addEventListener("pointerup", finish);
    canvas.addEventListener("pointercancel", finish);
  }

  private toNormalized(e: PointerEvent): Point2 {
    const rect = this.canvas.getBoundingClientRect();
    return [(e.clientX - rect.left) / rect.width, (e.clientY - rect.top) / rect.height];
  }

  setBackground(pngBase64: string): void {
    const img = new Image();
    img.onload = () => {
      this.background = img;
      this.render();
    };
    img.src = `data:image/png;base64,${pngBase64}`;
  }

  setOverlays(overlays: Point2[][]): void {
    this.overlays = overlays;
    this.render();
  }

  undo(): void {
    this.state.undo();
    this.render();
    this.onInkChange();
  }

  clear(): void {
    this.state.clear();
    this.overlays = [];
    this.render();
    this.onInkChange();
  }

  render(): void {
    const { width, height } = this.canvas;
    this.ctx.fillStyle = "#000";
    this.ctx.fillRect(0, 0, width, height);
    if (this.background) {
      this.ctx.imageSmoothingEnabled = false;
      this.ctx.drawImage(this.background, 0, 0, width, height);
    }
    for (const overlay of this.overlays.map((o, i) => ({ pts: o, color: sampleColor(i) }))) {
      if (overlay.pts.length < 2) continue;
      this.ctx.strokeStyle = overlay.color;
      this.ctx.lineWidth = 2;
      this.ctx.beginPath();
      this.ctx.moveTo(overlay.pts[0][0] * width, overlay.pts[0][1] * height);
      for (const [u, v] of overlay.pts.slice(1)) {
        this.ctx.lineTo(u * width, v * height);
      }
      this.ctx.stroke();
    }
    this.ctx.strokeStyle = "#ffee58";
    this.ctx.lineWidth = 3;
    for (const stroke of this.state.strokes) {
      if (stroke.length < 2) continue;
      this.ctx.beginPath();
      this.ctx.moveTo(stroke[0][0] * width, stroke[0][1] * height);
      for (const [u, v] of stroke.slice(1)) this.ctx.lineTo(u * width, v * height);
      this.ctx.stroke();
    }
  }
}
