// thin typed client over the service endpoints; fetch is injectable so the
// contract tests can replay recorded fixtures without a live server

import type {
  CollectResponse,
  GenerateRequest,
  GenerateResponse,
  Point3,
  RunStatus,
  SceneResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let message = `${resp.status}`;
      try {
        const data = await resp.json();
        message = data.message ?? JSON.stringify(data);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, message);
    }
    return (await resp.json()) as T;
  }

  scene(task: string, seed = 0, level = 1.0): Promise<SceneResponse> {
    return this.request("GET", `/api/scene/${task}/views?seed=${seed}&level=${level}`);
  }

  generate(req: GenerateRequest): Promise<GenerateResponse> {
    return this.request("POST", "/api/generate", req);
  }

  collect(task: string, trajectories: Point3[][], scene: Record<string, unknown>,
  ): Promise<CollectResponse> {
    return this.request("POST", "/api/demos/collect", { task, trajectories, scene });
  }

  trainBC(demosetId: string, epochs = 300): Promise<{ run_id: string }> {
    return this.request("POST", "/api/train/bc", { demoset_id: demosetId, epochs });
  }

  trainRL(task: string, demosetId: string | null, steps: number, lam = 0.05,
  ): Promise<{ run_id: string }> {
    return this.request("POST", "/api/train/rl", {
      task,
      demoset_id: demosetId,
      steps,
      lam,
      eval_interval: Math.max(100, Math.floor(steps / 20)),
      eval_episodes: 10,
    });
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request("GET", `/api/runs/${runId}/status`);
  }
}
