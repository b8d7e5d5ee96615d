// Central view model. Panels render from this and nothing else; the
// only writers are API responses, so no number on screen can be a
// client-side invention.

import type {
  BenchSummary,
  ConversationEntry,
  SceneDoc,
  SkillDoc,
  TrainStatus,
} from "./types";

export interface TeachMeta {
  active: boolean;
  sessionId: string | null;
  skill: string | null;
  frames: number;
}

export interface ViewModel {
  conversation: ConversationEntry[];
  scene: SceneDoc | null;
  mode: string;
  skills: SkillDoc[];
  libraryVersion: number;
  teach: TeachMeta;
  training: Record<string, TrainStatus>;
  benchmarks: BenchSummary[];
  connected: boolean;
  busy: boolean;
}

type Listener = (model: ViewModel) => void;

export class Store {
  private model: ViewModel = {
    conversation: [],
    scene: null,
    mode: "idle",
    skills: [],
    libraryVersion: 0,
    teach: { active: false, sessionId: null, skill: null, frames: 0 },
    training: {},
    benchmarks: [],
    connected: true,
    busy: false,
  };
  private listeners: Listener[] = [];
  private seq = 0;

  state(): ViewModel {
    return this.model;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.model);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  update(patch: Partial<ViewModel>) {
    this.model = { ...this.model, ...patch };
    for (const fn of this.listeners) fn(this.model);
  }

  pushEntry(entry: Omit<ConversationEntry, "id">) {
    this.seq += 1;
    const withId = { ...entry, id: this.seq } as ConversationEntry;
    this.update({ conversation: [...this.model.conversation, withId] });
    return withId;
  }

  setScene(scene: SceneDoc) {
    this.update({ scene, mode: scene.mode });
  }

  setSkills(version: number, skills: SkillDoc[]) {
    this.update({ libraryVersion: version, skills });
  }

  setTraining(name: string, status: TrainStatus) {
    this.update({ training: { ...this.model.training, [name]: status } });
  }

  setTeach(meta: Partial<TeachMeta>) {
    this.update({ teach: { ...this.model.teach, ...meta } });
  }
}
