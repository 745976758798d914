import { describe, expect, it } from "vitest";

import { mergeCurve } from "../src/poller.js";
import type { CurvePoint, Point3 } from "../src/types.js";
import { projectTurntable, sampleColor } from "../src/view3d.js";

const BOX = { min: [0.2, -0.2, 0.05] as Point3, max: [0.6, 0.2, 0.35] as Point3 };

describe("turntable projection", () => {
  it("keeps the workspace center at screen center for any yaw", () => {
    const center: Point3 = [0.4, 0.0, 0.2];
    for (const yaw of [0, 0.7, 2.2, Math.PI]) {
      const [[u, v]] = projectTurntable([center], BOX, { yaw, pitch: 0.4 });
      expect(u).toBeCloseTo(0.5, 10);
      expect(v).toBeCloseTo(0.5, 10);
    }
  });

  it("keeps points inside the unit screen box", () => {
    const corners: Point3[] = [];
    for (const x of [BOX.min[0], BOX.max[0]])
      for (const y of [BOX.min[1], BOX.max[1]])
        for (const z of [BOX.min[2], BOX.max[2]]) corners.push([x, y, z]);
    for (const yaw of [0, 0.5, 1.3]) {
      for (const [u, v] of projectTurntable(corners, BOX, { yaw, pitch: 0.5 })) {
        expect(u).toBeGreaterThan(-0.3);
        expect(u).toBeLessThan(1.3);
        expect(v).toBeGreaterThan(-0.3);
        expect(v).toBeLessThan(1.3);
      }
    }
  });

  it("higher z always maps to a higher screen position", () => {
    const lo: Point3 = [0.4, 0.0, 0.1];
    const hi: Point3 = [0.4, 0.0, 0.3];
    const [[, vLo], [, vHi]] = projectTurntable([lo, hi], BOX, { yaw: 0.9, pitch: 0.3 });
    expect(vHi).toBeLessThan(vLo); // screen v grows downward
  });

  it("sample colors cycle distinctly", () => {
    const colors = [0, 1, 2, 3].map(sampleColor);
    expect(new Set(colors).size).toBe(4);
  });
});

describe("curve merging", () => {
  const point = (step: number): CurvePoint => ({
    step, eval_success: 0, mean_r_hat: 0, disc_loss: null, source_fraction_il: 0,
  });

  it("never shrinks on stale polls", () => {
    const grown = [point(0), point(100), point(200)];
    expect(mergeCurve(grown, [point(0)])).toEqual(grown);
    expect(mergeCurve([point(0)], grown)).toEqual(grown);
  });
});
