// Teach-mode sampler. While a demonstration is live we post the pointer
// pose at a fixed 10 Hz regardless of pointer activity: an idle pointer
// repeats its last pose, which the recorder turns into zero-velocity
// frames. That stillness is part of the demonstration.

import type { Client } from "./api";
import type { TeachAck } from "./types";

const PERIOD_MS = 100;

export interface PointerPose {
  x: number;
  y: number;
  theta: number;
  gripper: number;
}

export class TeachSampler {
  private client: Client;
  private sessionId: string;
  private pose: PointerPose;
  private timer: ReturnType<typeof setInterval> | null = null;
  private sent = 0;
  private onFrame: ((count: number, ack: TeachAck) => void) | undefined;

  constructor(
    client: Client,
    sessionId: string,
    initial: PointerPose,
    onFrame?: (count: number, ack: TeachAck) => void,
  ) {
    this.client = client;
    this.sessionId = sessionId;
    this.pose = { ...initial };
    this.onFrame = onFrame;
  }

  get frameCount(): number {
    return this.sent;
  }

  get running(): boolean {
    return this.timer !== null;
  }

  // called from pointer events; takes effect at the next tick
  setPose(pose: PointerPose) {
    this.pose = { ...pose };
  }

  start() {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), PERIOD_MS);
  }

  stop() {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private tick() {
    const frame = {
      session_id: this.sessionId,
      x: this.pose.x,
      y: this.pose.y,
      theta: this.pose.theta,
      gripper: this.pose.gripper,
    };
    this.sent += 1;
    const count = this.sent;
    this.client
      .teachFrame(frame)
      .then((ack) => {
        if (this.onFrame) this.onFrame(count, ack);
      })
      .catch(() => {
        // a lost frame must not kill the sampler; the recorder's
        // logical clock tolerates it and stop() reconciles the count
      });
  }
}
