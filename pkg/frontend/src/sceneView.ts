// Scene rendering. The drawing is a pure function of the scene document
// and, during playback, of session frames the service already produced.
// There is no client-side physics: nothing here moves unless the
// service said it moved.

import type { SceneDoc, SceneObjectDoc, SessionFrame } from "./types";

const SCALE = 1000; // world metres to SVG units
const NS = "http://www.w3.org/2000/svg";

const KIND_COLORS: Record<string, string> = {
  white_bowl: "#d9d4c7",
  pan_cover: "#8a8f98",
  bottle: "#7a4a21",
  green_plate: "#4c9a57",
  red_bowl: "#b04a3a",
  crate: "#a3783c",
  lid: "#6b7280",
  sugar_box: "#c2a25c",
  goal_marking: "#3b82f6",
};

function el(tag: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

export class SceneView {
  private root: HTMLElement;
  private svg: SVGSVGElement | null = null;
  private eeGroup: SVGElement | null = null;
  private yMax = 0;
  lastFrameT: number | null = null;

  constructor(root: HTMLElement) {
    this.root = root;
  }

  render(scene: SceneDoc) {
    const [x0, y0, x1, y1] = scene.bounds;
    this.yMax = y1;
    const w = (x1 - x0) * SCALE;
    const h = (y1 - y0) * SCALE;
    const svg = el("svg", {
      viewBox: `${x0 * SCALE} ${0} ${w} ${h}`,
      width: "100%",
    }) as SVGSVGElement;
    svg.setAttribute("data-role", "scene");
    svg.appendChild(
      el("rect", {
        x: x0 * SCALE,
        y: 0,
        width: w,
        height: h,
        fill: "#f2efe9",
        stroke: "#444",
        "stroke-width": 2,
      }),
    );
    const ordered = [...scene.objects].sort((a, b) => a.layer - b.layer);
    for (const obj of ordered) svg.appendChild(this.drawObject(obj));
    this.eeGroup = this.drawEE(scene.ee.pose, scene.ee.gripper);
    svg.appendChild(this.eeGroup);
    this.root.replaceChildren(svg);
    this.svg = svg;
    this.lastFrameT = null;
  }

  // world y grows upward, SVG y grows downward
  private sx(x: number): number {
    return x * SCALE;
  }
  private sy(y: number): number {
    return (this.yMax - y) * SCALE;
  }

  private drawObject(obj: SceneObjectDoc): SVGElement {
    const [cx, cy, theta] = obj.pose;
    const fill = KIND_COLORS[obj.kind] ?? "#999";
    const opacity = obj.layer > 0 ? 0.75 : 1.0;
    if (obj.shape[0] === "disc") {
      const r = obj.shape[1] * SCALE;
      const node = el("circle", {
        cx: this.sx(cx),
        cy: this.sy(cy),
        r,
        fill,
        "fill-opacity": opacity,
        stroke: "#333",
      });
      node.setAttribute("data-object", obj.id);
      return node;
    }
    const w = obj.shape[1] * SCALE;
    const h = obj.shape[2] * SCALE;
    const px = this.sx(cx);
    const py = this.sy(cy);
    const deg = (-theta * 180) / Math.PI; // CCW world turns CW on screen
    const node = el("rect", {
      x: px - w / 2,
      y: py - h / 2,
      width: w,
      height: h,
      fill,
      "fill-opacity": opacity,
      stroke: "#333",
      transform: `rotate(${deg} ${px} ${py})`,
    });
    node.setAttribute("data-object", obj.id);
    return node;
  }

  private drawEE(pose: [number, number, number], gripper: number): SVGElement {
    const [x, y, theta] = pose;
    const g = el("g", {});
    g.setAttribute("data-role", "ee");
    const px = this.sx(x);
    const py = this.sy(y);
    g.appendChild(
      el("circle", {
        cx: px,
        cy: py,
        r: 12,
        fill: gripper > 0.5 ? "#222" : "none",
        stroke: "#222",
        "stroke-width": 3,
      }),
    );
    const hx = px + 24 * Math.cos(-theta);
    const hy = py + 24 * Math.sin(-theta);
    g.appendChild(
      el("line", {
        x1: px,
        y1: py,
        x2: hx,
        y2: hy,
        stroke: "#222",
        "stroke-width": 3,
      }),
    );
    return g;
  }

  // playback step: reposition the end effector per a recorded frame
  applyFrame(frame: SessionFrame) {
    if (!this.svg || !this.eeGroup) return;
    const next = this.drawEE(frame.ee, frame.gripper);
    this.svg.replaceChild(next, this.eeGroup);
    this.eeGroup = next;
    this.lastFrameT = frame.t;
  }
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

// plays recorded frames strictly in order; resolves when done
export async function playRollout(
  view: SceneView,
  frames: SessionFrame[],
  periodMs = 60,
  onFrame?: (frame: SessionFrame, index: number) => void,
): Promise<void> {
  for (let i = 0; i < frames.length; i++) {
    const frame = frames[i]!;
    view.applyFrame(frame);
    if (onFrame) onFrame(frame, i);
    if (periodMs > 0 && i < frames.length - 1) await sleep(periodMs);
  }
}
