// 1 Hz polling of a training run until it leaves the running state

import type { ApiClient } from "./api.js";
import type { RunStatus } from "./types.js";

export class RunPoller {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private client: ApiClient,
    private intervalMs = 1000,
  ) {}

  start(runId: string, onUpdate: (run: RunStatus) => void,
    onFinish: (run: RunStatus) => void, onError: (err: unknown) => void): void {
    this.stop();
    const tick = async () => {
      try {
        const run = await this.client.runStatus(runId);
        onUpdate(run);
        if (run.state !== "running") {
          this.stop();
          onFinish(run);
        }
      } catch (err) {
        this.stop();
        onError(err);
      }
    };
    this.timer = setInterval(tick, this.intervalMs);
    void tick();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

/** Append-only merge so a jittery poll can never shrink the plotted curve. */
export function mergeCurve(existing: RunStatus["curve"], incoming: RunStatus["curve"],
): RunStatus["curve"] {
  if (incoming.length >= existing.length) return incoming;
  return existing;
}
