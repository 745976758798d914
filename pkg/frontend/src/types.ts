// payload shapes of the HTTP API

export type Point2 = [number, number];
export type Point3 = [number, number, number];

export interface CameraInfo {
  id: string;
  axis_u: number;
  axis_v: number;
  flip_u: boolean;
  flip_v: boolean;
}

export interface SceneResponse {
  task: string;
  scene: Record<string, unknown>;
  view1_png: string;
  view2_png: string;
  cameras: CameraInfo[];
  workspace: [number[], number[]];
}

export interface GenerateRequest {
  strokes1: Point2[][];
  strokes2: Point2[][];
  m: number;
  noise_scale: number;
  seed?: number;
}

export interface GenerateResponse {
  trajectories: Point3[][];
  recon1_png: string | null;
  recon2_png: string | null;
  input1_png: string;
  input2_png: string;
  overlays: Record<string, Point2[][]>;
  n_tp: number;
}

export interface CollectResponse {
  demoset_id: string;
  count: number;
  success_rate: number;
  successes: number;
  mean_length: number;
}

export interface CurvePoint {
  step: number;
  eval_success: number;
  mean_r_hat: number;
  disc_loss: number | null;
  source_fraction_il: number;
}

export interface RunStatus {
  id: string;
  kind: string;
  state: "running" | "done" | "error";
  curve: CurvePoint[];
  result: Record<string, number> | null;
  error: string | null;
}
