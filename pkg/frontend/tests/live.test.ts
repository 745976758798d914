// optional end-to-end contract run against a live service:
//   SKETCHRL_SERVICE_URL=http://127.0.0.1:8008 npx vitest run tests/live.test.ts
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";

const BASE = process.env.SKETCHRL_SERVICE_URL;

describe.skipIf(!BASE)("live service round trip", () => {
  const client = new ApiClient(BASE!);
  const strokes1 = [[[0.1, 0.8], [0.4, 0.55], [0.7, 0.45], [0.9, 0.35]]] as never;
  const strokes2 = [[[0.15, 0.8], [0.45, 0.5], [0.8, 0.4]]] as never;

  it("draw -> generate -> overlay completes", async () => {
    const scene = await client.scene("reach", 1);
    expect(scene.view1_png.length).toBeGreaterThan(100);
    const gen = await client.generate({
      strokes1, strokes2, m: 2, noise_scale: 1.0, seed: 3,
    });
    expect(gen.trajectories).toHaveLength(2);
    expect(gen.overlays.view1).toHaveLength(2);
  });

  it("noise 0 repeats produce identical payloads", async () => {
    const req = { strokes1, strokes2, m: 1, noise_scale: 0.0 };
    const a = await client.generate(req);
    const b = await client.generate(req);
    expect(a.trajectories).toEqual(b.trajectories);
    expect(a.recon1_png).toEqual(b.recon1_png);
  });
});
