/**
 * Environment handle backed by a spawned Python worker.
 *
 * The worker speaks line-delimited JSON over stdio; every value crosses
 * the boundary as a JSON double with shortest round-trip formatting, so
 * binary64 numbers are preserved exactly. This module only marshals:
 * no simulation or reward logic lives on this side.
 */

import { spawn, ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, Interface } from "node:readline";

export interface EnvConfig {
  mode?: "fixed" | "generalized";
  preset?: string;
  gait?: "pace" | "spin";
  seed?: number;
  horizon?: number;
  kinematicOverride?: boolean;
  /** "disabled" collapses every randomization range to its nominal point */
  randomization?: "disabled" | Record<string, unknown>;
  morphology?: Record<string, unknown>;
}

export interface ResetOptions {
  phase?: number;
  rsi?: boolean;
}

export interface SpaceInfo {
  observationLength: number;
  actionLength: number;
}

export type StepResult = [
  observation: number[],
  reward: number,
  terminated: boolean,
  truncated: boolean,
  info: { phase: number; steps: number },
];

export class EnvError extends Error {
  /** Error class name reported by the worker, e.g. ConfigurationError */
  readonly remoteType: string;

  constructor(message: string, remoteType: string) {
    super(message);
    this.remoteType = remoteType;
  }
}

interface Pending {
  resolve: (response: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class QuadEnv {
  private proc: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending: Pending[] = [];
  private closed = false;
  private space: SpaceInfo | null = null;

  private constructor(python: string) {
    this.proc = spawn(python, ["-m", "quadlab.envserver"], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    this.lines = createInterface({ input: this.proc.stdout });
    this.lines.on("line", (line) => {
      const next = this.pending.shift();
      if (next) next.resolve(JSON.parse(line));
    });
    this.proc.on("exit", () => {
      this.closed = true;
      for (const p of this.pending.splice(0)) {
        p.reject(new EnvError("worker exited", "WorkerExit"));
      }
    });
  }

  /** Spawn a worker and initialize one environment in it. */
  static async create(
    config: EnvConfig = {},
    python = "python3",
  ): Promise<QuadEnv> {
    const env = new QuadEnv(python);
    const wire: Record<string, unknown> = {
      mode: config.mode,
      preset: config.preset,
      gait: config.gait,
      seed: config.seed,
      horizon: config.horizon,
      kinematic_override: config.kinematicOverride,
      randomization: config.randomization,
      morphology: config.morphology,
    };
    for (const key of Object.keys(wire)) {
      if (wire[key] === undefined) delete wire[key];
    }
    const resp = await env.request({ op: "init", config: wire });
    env.space = {
      observationLength: resp.observation_length as number,
      actionLength: resp.action_length as number,
    };
    return env;
  }

  observationSpace(): SpaceInfo {
    if (!this.space) throw new EnvError("not initialized", "StateError");
    return this.space;
  }

  async reset(options: ResetOptions = {}): Promise<number[]> {
    const req: Record<string, unknown> = { op: "reset" };
    if (options.phase !== undefined) req.phase = options.phase;
    if (options.rsi !== undefined) req.rsi = options.rsi;
    const resp = await this.request(req);
    return resp.observation as number[];
  }

  async step(action: number[]): Promise<StepResult> {
    if (!Array.isArray(action) || action.length !== this.space?.actionLength) {
      throw new EnvError(
        `action must have length ${this.space?.actionLength}`,
        "ArgumentError",
      );
    }
    const resp = await this.request({ op: "step", action });
    return [
      resp.observation as number[],
      resp.reward as number,
      resp.terminated as boolean,
      resp.truncated as boolean,
      resp.info as { phase: number; steps: number },
    ];
  }

  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request({ op: "close" });
    } finally {
      this.closed = true;
      this.proc.kill();
    }
  }

  private request(
    payload: Record<string, unknown>,
  ): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new EnvError("environment closed", "StateError"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({
        resolve: (resp) => {
          if (resp.ok) {
            resolve(resp);
          } else {
            reject(
              new EnvError(resp.error as string, resp.type as string),
            );
          }
        },
        reject,
      });
      this.proc.stdin.write(JSON.stringify(payload) + "\n");
    });
  }
}
