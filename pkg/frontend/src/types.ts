// Documents exchanged with the orchestrator API. Field names mirror the
// service JSON exactly; the UI never invents numbers of its own.

export type OutcomeKind = "executed" | "teach_requested" | "blocked" | "error";

export interface PromptOutcome {
  kind: OutcomeKind;
  request: string;
  skill?: string;
  stage?: string;
  reason?: string;
  session_id?: string;
  ticks?: number;
  success?: boolean;
}

export interface SkillDoc {
  name: string;
  description: string;
  preconditions: string;
  tool: string;
  policy_id: string | null;
  status: "pending_demos" | "training" | "trained";
  task: string | null;
}

export interface SceneObjectDoc {
  id: string;
  kind: string;
  pose: [number, number, number];
  shape: ["rect", number, number] | ["disc", number];
  attached_to: string | null;
  fixed: boolean;
  layer: number;
  extras: Record<string, unknown>;
}

export interface SceneDoc {
  task: string;
  time: number;
  bounds: [number, number, number, number];
  ee: { pose: [number, number, number]; gripper: number; tool: string };
  objects: SceneObjectDoc[];
  mode: string;
  tool: string;
}

export interface SessionFrame {
  t: number;
  ee: [number, number, number];
  gripper: number;
  action: number[];
}

export interface TrainStatus {
  state: "none" | "running" | "done" | "failed";
  skill_status: string;
  epoch?: number;
  epochs?: number;
  loss?: number | null;
  policy_id?: string | null;
  error?: string | null;
  episodes?: number;
}

export interface TeachFrame {
  session_id: string;
  x: number;
  y: number;
  theta: number;
  gripper: number;
}

export interface TeachAck {
  t: number;
  frames: number;
  ee: [number, number, number];
}

export interface TeachStopResult {
  episode: string;
  frames: number;
  path: string;
  skill: string;
}

// benchmark report summaries shown on the dashboard
export interface BenchSummary {
  name?: string;
  cases: number;
  correct?: number;
  accuracy?: number;
  [key: string]: number | string | undefined;
}

export interface ConversationEntry {
  id: number;
  request: string;
  outcome: PromptOutcome;
}
