// app wiring: scene loading, dual sketch pads, generation, demos, training

import { ApiClient } from "./api.js";
import { drawCurve } from "./curve.js";
import { RunPoller, mergeCurve } from "./poller.js";
import { SketchPad } from "./sketchpad.js";
import type { GenerateResponse, Point3, RunStatus, SceneResponse } from "./types.js";
import { drawPolylines, projectTurntable, sampleColor } from "./view3d.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const client = new ApiClient("");
const poller = new RunPoller(client);

let scene: SceneResponse | null = null;
let lastGeneration: GenerateResponse | null = null;
let lastDemosetId: string | null = null;
let bcRunId: string | null = null;
let yaw = 0.8;
const pitch = 0.5;
let curveCache: RunStatus["curve"] = [];

function setStatus(text: string, isError = false): void {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

function refreshButtons(): void {
  const inked = pad1.state.hasInk() && pad2.state.hasInk();
  ($("generate") as HTMLButtonElement).disabled = !scene || !inked;
  ($("collect") as HTMLButtonElement).disabled = !lastGeneration;
  ($("train-bc") as HTMLButtonElement).disabled = !lastDemosetId;
  ($("train-rl") as HTMLButtonElement).disabled = !lastDemosetId;
}

const pad1 = new SketchPad($("pad1") as HTMLCanvasElement, refreshButtons);
const pad2 = new SketchPad($("pad2") as HTMLCanvasElement, refreshButtons);

async function loadScene(): Promise<void> {
  const task = ($("task") as HTMLSelectElement).value;
  const seed = Number(($("seed") as HTMLInputElement).value || "0");
  try {
    scene = await client.scene(task, seed);
    pad1.clear();
    pad2.clear();
    pad1.setBackground(scene.view1_png);
    pad2.setBackground(scene.view2_png);
    lastGeneration = null;
    lastDemosetId = null;
    setStatus(`scene loaded for ${task} (seed ${seed})`);
  } catch (err) {
    setStatus(`scene load failed: ${err}`, true);
  }
  refreshButtons();
}

function render3D(): void {
  if (!lastGeneration || !scene) return;
  const canvas = $("view3d") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const box = {
    min: scene.workspace[0] as Point3,
    max: scene.workspace[1] as Point3,
  };
  const projected = lastGeneration.trajectories.map((t) =>
    projectTurntable(t, box, { yaw, pitch }));
  drawPolylines(ctx, canvas.width, projected,
    projected.map((_, i) => sampleColor(i)));
}

async function generate(): Promise<void> {
  if (!scene) return;
  const m = Number(($("m") as HTMLInputElement).value || "1");
  const noise = Number(($("noise") as HTMLInputElement).value || "0");
  setStatus("generating...");
  try {
    lastGeneration = await client.generate({
      strokes1: pad1.state.strokes,
      strokes2: pad2.state.strokes,
      m,
      noise_scale: noise,
    });
    pad1.setOverlays(lastGeneration.overlays.view1 ?? []);
    pad2.setOverlays(lastGeneration.overlays.view2 ?? []);
    ($("recon1") as HTMLImageElement).src =
      `data:image/png;base64,${lastGeneration.recon1_png}`;
    ($("recon2") as HTMLImageElement).src =
      `data:image/png;base64,${lastGeneration.recon2_png}`;
    const legend = $("legend");
    legend.innerHTML = "";
    lastGeneration.trajectories.forEach((_, i) => {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.style.background = sampleColor(i);
      chip.textContent = `sample ${i + 1}`;
      legend.appendChild(chip);
    });
    render3D();
    setStatus(`generated ${lastGeneration.trajectories.length} trajectories`);
  } catch (err) {
    setStatus(`generation failed: ${err}`, true);
  }
  refreshButtons();
}

async function collectDemos(): Promise<void> {
  if (!lastGeneration || !scene) return;
  setStatus("collecting demonstrations...");
  try {
    const summary = await client.collect(scene.task, lastGeneration.trajectories,
      scene.scene);
    lastDemosetId = summary.demoset_id;
    $("demo-summary").textContent =
      `${summary.count} demos, ${summary.successes} successful ` +
      `(rate ${summary.success_rate.toFixed(2)}), mean length ` +
      summary.mean_length.toFixed(1);
    setStatus("demonstrations collected");
  } catch (err) {
    setStatus(`collection failed: ${err}`, true);
  }
  refreshButtons();
}

function watchRun(runId: string, label: string): void {
  curveCache = [];
  poller.start(
    runId,
    (run) => {
      curveCache = mergeCurve(curveCache, run.curve);
      const canvas = $("curve") as HTMLCanvasElement;
      drawCurve(canvas.getContext("2d")!, canvas.width, canvas.height, curveCache);
      $("run-state").textContent = `${label}: ${run.state}`;
    },
    (run) => {
      if (run.state === "done") {
        const final = run.result?.final_success ?? run.result?.final_loss;
        $("run-state").textContent =
          `${label}: done (${final !== undefined ? final.toFixed(3) : "ok"})`;
        if (run.kind === "bc") bcRunId = run.id;
      } else {
        $("run-state").textContent = `${label}: error ${run.error}`;
      }
    },
    (err) => setStatus(`polling failed: ${err}`, true),
  );
}

async function trainBC(): Promise<void> {
  if (!lastDemosetId) return;
  try {
    const { run_id } = await client.trainBC(lastDemosetId);
    watchRun(run_id, "BC run");
  } catch (err) {
    setStatus(`BC launch failed: ${err}`, true);
  }
}

async function trainRL(): Promise<void> {
  if (!lastDemosetId || !scene) return;
  const steps = Number(($("steps") as HTMLInputElement).value || "5000");
  try {
    const { run_id } = await client.trainRL(scene.task, lastDemosetId, steps);
    watchRun(run_id, "RL run");
  } catch (err) {
    setStatus(`RL launch failed: ${err}`, true);
  }
}

$("load-scene").addEventListener("click", () => void loadScene());
$("generate").addEventListener("click", () => void generate());
$("collect").addEventListener("click", () => void collectDemos());
$("train-bc").addEventListener("click", () => void trainBC());
$("train-rl").addEventListener("click", () => void trainRL());
$("undo1").addEventListener("click", () => pad1.undo());
$("undo2").addEventListener("click", () => pad2.undo());
$("clear1").addEventListener("click", () => pad1.clear());
$("clear2").addEventListener("click", () => pad2.clear());
($("view3d") as HTMLCanvasElement).addEventListener("pointermove", (e) => {
  if (e.buttons === 0) return;
  yaw += e.movementX * 0.01;
  render3D();
});

refreshButtons();
void loadScene();
export { bcRunId };
