export { QuadEnv, EnvError } from "./env.js";
export type {
  EnvConfig,
  ResetOptions,
  SpaceInfo,
  StepResult,
} from "./env.js";
export { traceActions } from "./trace.js";
