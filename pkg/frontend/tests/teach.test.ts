import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { Client } from "../src/api";
import { TeachSampler } from "../src/teach";
import type { TeachFrame } from "../src/types";

function stubClient() {
  const frames: TeachFrame[] = [];
  const client = {
    teachFrame: (frame: TeachFrame) => {
      frames.push(frame);
      return Promise.resolve({ t: (frames.length - 1) / 10, frames: frames.length, ee: [0, 0, 0] });
    },
  } as unknown as Client;
  return { client, frames };
}

describe("TeachSampler", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("posts exactly 100 frames over a 10 second session", async () => {
    const { client, frames } = stubClient();
    const sampler = new TeachSampler(client, "teach-0001", {
      x: 0.2,
      y: 0.2,
      theta: 0,
      gripper: 0,
    });
    sampler.start();
    await vi.advanceTimersByTimeAsync(10_000);
    sampler.stop();
    expect(frames).toHaveLength(100);
    expect(sampler.frameCount).toBe(100);
    await vi.advanceTimersByTimeAsync(1_000);
    expect(frames).toHaveLength(100); // nothing after stop
  });

  it("records an idle pointer as repeated identical poses", async () => {
    const { client, frames } = stubClient();
    const sampler = new TeachSampler(client, "teach-0001", {
      x: 0.3,
      y: 0.25,
      theta: 0.1,
      gripper: 1,
    });
    sampler.start();
    await vi.advanceTimersByTimeAsync(500);
    sampler.stop();
    expect(frames).toHaveLength(5);
    for (const f of frames) {
      expect(f.x).toBe(0.3);
      expect(f.y).toBe(0.25);
      expect(f.theta).toBe(0.1);
      expect(f.gripper).toBe(1);
      expect(f.session_id).toBe("teach-0001");
    }
  });

  it("applies pose updates at the next tick", async () => {
    const { client, frames } = stubClient();
    const sampler = new TeachSampler(client, "teach-0001", {
      x: 0,
      y: 0,
      theta: 0,
      gripper: 0,
    });
    sampler.start();
    await vi.advanceTimersByTimeAsync(300);
    sampler.setPose({ x: 0.5, y: 0.4, theta: 0, gripper: 1 });
    await vi.advanceTimersByTimeAsync(200);
    sampler.stop();
    expect(frames.slice(0, 3).every((f) => f.x === 0)).toBe(true);
    expect(frames.slice(3).every((f) => f.x === 0.5 && f.gripper === 1)).toBe(true);
  });

  it("reports a live frame count through the callback", async () => {
    const { client } = stubClient();
    const counts: number[] = [];
    const sampler = new TeachSampler(
      client,
      "teach-0001",
      { x: 0, y: 0, theta: 0, gripper: 0 },
      (count) => counts.push(count),
    );
    sampler.start();
    await vi.advanceTimersByTimeAsync(1_000);
    sampler.stop();
    expect(counts).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
  });

  it("survives a rejected frame post", async () => {
    let failures = 0;
    const client = {
      teachFrame: () => {
        failures += 1;
        return failures === 1
          ? Promise.reject(new Error("connection reset"))
          : Promise.resolve({ t: 0, frames: failures, ee: [0, 0, 0] });
      },
    } as unknown as Client;
    const sampler = new TeachSampler(client, "teach-0001", {
      x: 0,
      y: 0,
      theta: 0,
      gripper: 0,
    });
    sampler.start();
    await vi.advanceTimersByTimeAsync(300);
    sampler.stop();
    expect(sampler.frameCount).toBe(3); // kept sampling past the failure
  });

  it("start is idempotent", async () => {
    const { client, frames } = stubClient();
    const sampler = new TeachSampler(client, "teach-0001", {
      x: 0,
      y: 0,
      theta: 0,
      gripper: 0,
    });
    sampler.start();
    sampler.start();
    await vi.advanceTimersByTimeAsync(500);
    sampler.stop();
    expect(frames).toHaveLength(5); // one timer, not two
  });
});
