// Typed client for the orchestrator API.
//
// Mutating calls are serialized through a single in-flight slot, the
// client-side mirror of the service's one-robot mode gate. Teach frames
// are the exception: they run on their own ordered queue so a slow
// dashboard call can never stall the 10 Hz stream, and frame order is
// preserved because the recorder's logical clock depends on arrival
// order.

import type {
  BenchSummary,
  PromptOutcome,
  SceneDoc,
  SessionFrame,
  SkillDoc,
  TeachAck,
  TeachFrame,
  TeachStopResult,
  TrainStatus,
} from "./types";

export class ApiError extends Error {
  status: number;
  errorType: string;

  constructor(status: number, errorType: string, detail: string) {
    super(detail);
    this.status = status;
    this.errorType = errorType;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private base: string;
  private fetchFn: FetchLike;
  private mutationChain: Promise<unknown> = Promise.resolve();
  private frameChain: Promise<unknown> = Promise.resolve();

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    const f = fetchFn ?? globalThis.fetch;
    // keep fetch bound to its global receiver
    this.fetchFn = (url, init) => f(url, init);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(`${this.base}${path}`, init);
    const text = await res.text();
    let payload: any = null;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      payload = null;
    }
    if (!res.ok) {
      const errorType = payload?.error ?? "HttpError";
      const detail = payload?.detail ?? `${res.status} on ${path}`;
      throw new ApiError(res.status, errorType, String(detail));
    }
    return payload as T;
  }

  // every mutating call after this one waits for it, success or not
  private gated<T>(run: () => Promise<T>): Promise<T> {
    const next = this.mutationChain.then(run, run);
    this.mutationChain = next.catch(() => undefined);
    return next;
  }

  version() {
    return this.request<{ version: string; service: string }>("GET", "/api/version");
  }

  prompt(request: string) {
    return this.gated(() =>
      this.request<PromptOutcome>("POST", "/api/prompt", { request }),
    );
  }

  skills() {
    return this.request<{ version: number; skills: SkillDoc[] }>("GET", "/api/skills");
  }

  skill(name: string) {
    return this.request<SkillDoc>("GET", `/api/skills/${encodeURIComponent(name)}`);
  }

  createSkill(doc: {
    name: string;
    description: string;
    preconditions: string;
    tool?: string;
    task?: string | null;
  }) {
    return this.gated(() => this.request<SkillDoc>("POST", "/api/skills", doc));
  }

  teachStart(skill: string, operator = "operator") {
    return this.gated(() =>
      this.request<{ session_id: string }>("POST", "/api/teach/start", {
        skill,
        operator,
      }),
    );
  }

  // ordered, non-blocking path: never behind the mutation gate
  teachFrame(frame: TeachFrame): Promise<TeachAck> {
    const next = this.frameChain.then(
      () => this.request<TeachAck>("POST", "/api/teach/frame", frame),
      () => this.request<TeachAck>("POST", "/api/teach/frame", frame),
    );
    this.frameChain = next.catch(() => undefined);
    return next;
  }

  teachStop(sessionId: string, success = true) {
    return this.gated(async () => {
      await this.frameChain; // let queued frames land before finishing
      return this.request<TeachStopResult>("POST", "/api/teach/stop", {
        session_id: sessionId,
        success,
      });
    });
  }

  train(name: string, opts: { epochs?: number; preload_program?: boolean } = {}) {
    return this.gated(() =>
      this.request<TrainStatus>("POST", `/api/train/${encodeURIComponent(name)}`, opts),
    );
  }

  trainStatus(name: string) {
    return this.request<TrainStatus>(
      "GET",
      `/api/train/${encodeURIComponent(name)}/status`,
    );
  }

  scene() {
    return this.request<SceneDoc>("GET", "/api/scene");
  }

  sceneReset(opts: { seed?: number; task?: string; options?: Record<string, unknown> } = {}) {
    return this.gated(() => this.request<SceneDoc>("POST", "/api/scene/reset", opts));
  }

  sceneAmend(changes: Record<string, unknown>) {
    return this.gated(() => this.request<SceneDoc>("POST", "/api/scene/amend", changes));
  }

  sessionFrames(sessionId: string) {
    return this.request<{ session_id: string; frames: SessionFrame[] }>(
      "GET",
      `/api/session/${encodeURIComponent(sessionId)}/frames`,
    );
  }

  transcript(kind?: string) {
    const suffix = kind ? `?kind=${encodeURIComponent(kind)}` : "";
    return this.request<{ entries: Record<string, unknown>[] }>(
      "GET",
      `/api/transcript${suffix}`,
    );
  }

  scenario(seed = 0) {
    return this.gated(() =>
      this.request<{ outcomes: PromptOutcome[] }>("POST", `/api/scenario?seed=${seed}`),
    );
  }
}

export type { BenchSummary };
