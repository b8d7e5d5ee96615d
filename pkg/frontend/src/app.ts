// Application shell: wires the client, store, panels, scene view and
// teach sampler together. Mutations flow through the client's single
// in-flight gate; reads poll on a timer and drive the connection
// banner.

import { ApiError, Client } from "./api";
import {
  renderBenchmarks,
  renderConnectionBanner,
  renderConversation,
  renderModeIndicator,
  renderSkillTable,
  renderTeachPanel,
  renderTrainingStatus,
} from "./panels";
import { playRollout, SceneView } from "./sceneView";
import { Store } from "./store";
import { TeachSampler } from "./teach";
import type { SceneDoc } from "./types";

const POLL_MS = 1000;
const TRAIN_POLL_MS = 400;

// maps a pointer position inside the scene element to world coordinates
export function pointerToWorld(
  rect: { left: number; top: number; width: number; height: number },
  bounds: [number, number, number, number],
  clientX: number,
  clientY: number,
): { x: number; y: number } {
  const [x0, y0, x1, y1] = bounds;
  const fx = (clientX - rect.left) / Math.max(rect.width, 1);
  const fy = (clientY - rect.top) / Math.max(rect.height, 1);
  return {
    x: x0 + fx * (x1 - x0),
    y: y1 - fy * (y1 - y0), // screen y runs opposite to world y
  };
}

export class App {
  client: Client;
  store = new Store();
  playbackPeriodMs = 40; // delay between replayed frames
  private sceneView: SceneView;
  private sampler: TeachSampler | null = null;
  private els: Record<string, HTMLElement>;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, client: Client) {
    this.client = client;
    this.els = {
      banner: root.querySelector("#banner") as HTMLElement,
      mode: root.querySelector("#mode") as HTMLElement,
      scene: root.querySelector("#scene") as HTMLElement,
      conversation: root.querySelector("#conversation") as HTMLElement,
      teach: root.querySelector("#teach") as HTMLElement,
      skills: root.querySelector("#skills") as HTMLElement,
      training: root.querySelector("#training") as HTMLElement,
      benchmarks: root.querySelector("#benchmarks") as HTMLElement,
      amendForm: root.querySelector("#amend-form") as HTMLElement,
    };
    this.sceneView = new SceneView(this.els.scene!);
    this.store.subscribe((model) => this.renderAll(model));
    this.bindForms(root);
  }

  private renderAll(model: ReturnType<Store["state"]>) {
    renderConnectionBanner(this.els.banner!, model);
    renderModeIndicator(this.els.mode!, model);
    renderConversation(this.els.conversation!, model, {
      onAmend: () => this.focusAmendForm(),
      onTeach: (skill) => void this.startTeach(skill),
      onReplay: (sessionId) => void this.replay(sessionId),
    });
    renderTeachPanel(this.els.teach!, model, (ok) => void this.stopTeach(ok));
    renderSkillTable(this.els.skills!, model, (skill) => void this.train(skill.name));
    renderTrainingStatus(this.els.training!, model);
    renderBenchmarks(this.els.benchmarks!, model);
  }

  private bindForms(root: HTMLElement) {
    const promptForm = root.querySelector("#prompt-form") as HTMLFormElement | null;
    promptForm?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const input = promptForm.querySelector("input[name=request]") as HTMLInputElement;
      const text = input.value.trim();
      if (text) void this.submitPrompt(text);
      input.value = "";
    });
    const amendForm = root.querySelector("#amend-form") as HTMLFormElement | null;
    amendForm?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitAmend(amendForm);
    });
  }

  async start() {
    await this.refreshScene();
    await this.refreshSkills();
    this.pollTimer = setInterval(() => void this.poll(), POLL_MS);
  }

  stop() {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
    this.sampler?.stop();
  }

  private async poll() {
    try {
      await this.refreshScene();
      if (!this.store.state().connected) this.store.update({ connected: true });
    } catch (err) {
      // HTTP errors mean the service is alive; only transport failures
      // flip the banner
      if (!(err instanceof ApiError)) this.store.update({ connected: false });
    }
  }

  private async refreshScene() {
    const scene = await this.client.scene();
    this.store.setScene(scene);
    if (!this.store.state().teach.active) this.sceneView.render(scene);
  }

  private async refreshSkills() {
    const listing = await this.client.skills();
    this.store.setSkills(listing.version, listing.skills);
  }

  async submitPrompt(request: string) {
    this.store.update({ busy: true });
    try {
      const outcome = await this.client.prompt(request);
      this.store.pushEntry({ request, outcome });
      await this.refreshScene();
      await this.refreshSkills();
      if (outcome.kind === "executed" && outcome.session_id) {
        await this.replay(outcome.session_id);
      }
    } catch (err) {
      this.store.pushEntry({
        request,
        outcome: { kind: "error", request, reason: String((err as Error).message) },
      });
    } finally {
      this.store.update({ busy: false });
    }
  }

  async replay(sessionId: string) {
    const { frames } = await this.client.sessionFrames(sessionId);
    await playRollout(this.sceneView, frames, this.playbackPeriodMs);
    await this.refreshScene();
  }

  focusAmendForm() {
    const form = this.els.amendForm;
    if (!form) return;
    form.classList.add("highlight");
    (form.querySelector("input") as HTMLInputElement | null)?.focus();
  }

  async submitAmend(form: HTMLFormElement) {
    const changes: Record<string, unknown> = {};
    const sausages = (form.querySelector("input[name=sausages]") as HTMLInputElement)?.value;
    if (sausages !== "" && sausages !== undefined) changes.sausages = Number(sausages);
    const rice = (form.querySelector("select[name=rice]") as HTMLSelectElement)?.value;
    if (rice) changes.rice = rice === "true";
    const capped = (form.querySelector("select[name=capped]") as HTMLSelectElement)?.value;
    if (capped) changes.capped = capped === "true";
    const cover = (form.querySelector("select[name=pan_cover]") as HTMLSelectElement)?.value;
    if (cover) changes.pan_cover = cover;
    if (Object.keys(changes).length === 0) return;
    try {
      const scene = await this.client.sceneAmend(changes);
      this.store.setScene(scene);
      this.sceneView.render(scene);
      form.classList.remove("highlight");
    } catch (err) {
      this.store.pushEntry({
        request: "amend scene",
        outcome: {
          kind: "error",
          request: "amend scene",
          reason: String((err as Error).message),
        },
      });
    }
  }

  async startTeach(skillName: string) {
    if (this.sampler) return; // UI gate: one session at a time
    try {
      const { session_id } = await this.client.teachStart(skillName);
      const scene = this.store.state().scene;
      const start = scene ? scene.ee.pose : ([0, 0, 0] as [number, number, number]);
      this.sampler = new TeachSampler(
        this.client,
        session_id,
        { x: start[0], y: start[1], theta: start[2], gripper: 0 },
        (count) => this.store.setTeach({ frames: count }),
      );
      this.store.setTeach({
        active: true,
        sessionId: session_id,
        skill: skillName,
        frames: 0,
      });
      this.bindPointer();
      this.sampler.start();
    } catch (err) {
      this.store.pushEntry({
        request: `teach ${skillName}`,
        outcome: {
          kind: "error",
          request: `teach ${skillName}`,
          reason: String((err as Error).message),
        },
      });
    }
  }

  private bindPointer() {
    const surface = this.els.scene!;
    const scene = this.store.state().scene;
    if (!scene) return;
    const bounds = scene.bounds;
    const toPose = (ev: PointerEvent, gripper: number) => {
      const rect = surface.getBoundingClientRect();
      const { x, y } = pointerToWorld(rect, bounds, ev.clientX, ev.clientY);
      return { x, y, theta: 0, gripper };
    };
    surface.onpointerdown = (ev) => this.sampler?.setPose(toPose(ev, 1));
    surface.onpointermove = (ev) => {
      if (ev.buttons > 0) this.sampler?.setPose(toPose(ev, 1));
      // idle pointer: no update, the sampler reposts the last pose so
      // stillness is recorded as zero-velocity frames
    };
    surface.onpointerup = (ev) => this.sampler?.setPose(toPose(ev, 0));
  }

  async stopTeach(success: boolean) {
    const sampler = this.sampler;
    const sessionId = this.store.state().teach.sessionId;
    if (!sampler || !sessionId) return; // stop without start is unreachable
    sampler.stop();
    this.sampler = null;
    const surface = this.els.scene!;
    surface.onpointerdown = surface.onpointermove = surface.onpointerup = null;
    try {
      await this.client.teachStop(sessionId, success);
      this.store.setTeach({ active: false, sessionId: null, skill: null });
      await this.refreshScene();
      await this.refreshSkills();
    } catch (err) {
      this.store.setTeach({ active: false, sessionId: null, skill: null });
      this.store.pushEntry({
        request: "finish demonstration",
        outcome: {
          kind: "error",
          request: "finish demonstration",
          reason: String((err as Error).message),
        },
      });
    }
  }

  async train(skillName: string) {
    try {
      const status = await this.client.train(skillName);
      this.store.setTraining(skillName, status);
      await this.refreshSkills();
      if (status.state === "running") this.watchTraining(skillName);
    } catch (err) {
      this.store.pushEntry({
        request: `train ${skillName}`,
        outcome: {
          kind: "error",
          request: `train ${skillName}`,
          reason: String((err as Error).message),
        },
      });
    }
  }

  private watchTraining(skillName: string) {
    const timer = setInterval(async () => {
      try {
        const status = await this.client.trainStatus(skillName);
        this.store.setTraining(skillName, status);
        if (status.state === "done" || status.state === "failed") {
          clearInterval(timer);
          await this.refreshSkills();
        }
      } catch {
        clearInterval(timer);
      }
    }, TRAIN_POLL_MS);
  }
}

export function boot(root: HTMLElement, baseUrl: string): App {
  const app = new App(root, new Client(baseUrl));
  void app.start();
  return app;
}
