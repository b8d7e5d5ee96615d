// Panel renderers. Each takes a container and the view model and
// rebuilds its DOM; outcome text is shown verbatim, errors are surfaced
// rather than swallowed, and every number comes from a service payload.

import { percent, fixed, skillStatusLabel } from "./format";
import type { ViewModel } from "./store";
import type { ConversationEntry, SkillDoc, TrainStatus } from "./types";

export interface ConversationHandlers {
  onAmend: (entry: ConversationEntry) => void;
  onTeach: (skill: string) => void;
  onReplay: (sessionId: string) => void;
}

function div(className: string, text?: string): HTMLDivElement {
  const node = document.createElement("div");
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, className: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.className = className;
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}

export function renderModeIndicator(container: HTMLElement, model: ViewModel) {
  container.textContent = model.mode;
  container.className = `mode mode-${model.mode}`;
  container.setAttribute("data-mode", model.mode);
}

export function renderConnectionBanner(container: HTMLElement, model: ViewModel) {
  if (model.connected) {
    container.replaceChildren();
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.replaceChildren(
    div("banner banner-offline", "connection to the robot service lost, retrying"),
  );
}

function renderOutcome(entry: ConversationEntry, handlers: ConversationHandlers): HTMLElement {
  const o = entry.outcome;
  const wrap = div(`outcome outcome-${o.kind}`);
  wrap.setAttribute("data-kind", o.kind);
  switch (o.kind) {
    case "executed": {
      const banner = div("banner banner-success");
      banner.textContent = o.skill
        ? `executed ${o.skill} (${o.ticks ?? 0} ticks)`
        : "executed";
      wrap.appendChild(banner);
      if (o.session_id) {
        wrap.appendChild(
          button("replay rollout", "replay", () => handlers.onReplay(o.session_id!)),
        );
      }
      break;
    }
    case "blocked": {
      wrap.appendChild(div("reason", o.reason ?? "preconditions not met"));
      wrap.appendChild(
        button("amend scene", "amend", () => handlers.onAmend(entry)),
      );
      break;
    }
    case "teach_requested": {
      wrap.appendChild(div("reason", o.reason ?? "no matching skill"));
      const name = o.skill ?? entry.request;
      wrap.appendChild(
        button(`teach ${name}`, "teach", () => handlers.onTeach(name)),
      );
      break;
    }
    case "error": {
      wrap.appendChild(div("reason error-text", o.reason ?? "request failed"));
      break;
    }
  }
  return wrap;
}

export function renderConversation(
  container: HTMLElement,
  model: ViewModel,
  handlers: ConversationHandlers,
) {
  const log = div("conversation");
  for (const entry of model.conversation) {
    const row = div("entry");
    row.setAttribute("data-entry", String(entry.id));
    const req = div("request");
    req.textContent = entry.request; // verbatim, no rewriting
    row.appendChild(req);
    row.appendChild(renderOutcome(entry, handlers));
    log.appendChild(row);
  }
  container.replaceChildren(log);
}

function demoCount(status: TrainStatus | undefined): string {
  if (status && typeof status.episodes === "number") return String(status.episodes);
  return "-"; // service has not reported a count for this skill yet
}

export function renderSkillTable(
  container: HTMLElement,
  model: ViewModel,
  onTrain?: (skill: SkillDoc) => void,
) {
  if (model.skills.length === 0) {
    container.replaceChildren(div("empty-state", "no skills in the library yet"));
    return;
  }
  const table = document.createElement("table");
  table.className = "skills";
  const head = table.createTHead().insertRow();
  for (const label of ["skill", "status", "demos", ""]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const skill of model.skills) {
    const row = body.insertRow();
    row.setAttribute("data-skill", skill.name);
    row.insertCell().textContent = skill.name;
    row.insertCell().textContent = skillStatusLabel(skill.status);
    row.insertCell().textContent = demoCount(model.training[skill.name]);
    const actions = row.insertCell();
    if (onTrain && skill.status !== "training") {
      actions.appendChild(button("train", "train", () => onTrain(skill)));
    }
  }
  container.replaceChildren(table);
}

export function renderTrainingStatus(container: HTMLElement, model: ViewModel) {
  const rows: HTMLElement[] = [];
  for (const [name, status] of Object.entries(model.training)) {
    if (status.state === "none") continue;
    const row = div(`training training-${status.state}`);
    row.setAttribute("data-training", name);
    let text = `${name}: ${status.state}`;
    if (status.state === "running" || status.state === "done") {
      if (typeof status.epoch === "number" && typeof status.epochs === "number") {
        text += ` (epoch ${status.epoch}/${status.epochs}`;
        if (typeof status.loss === "number") text += `, loss ${fixed(status.loss, 4)}`;
        text += ")";
      }
    }
    if (status.state === "failed" && status.error) {
      text += `: ${status.error}`;
    }
    row.textContent = text;
    rows.push(row);
  }
  if (rows.length === 0) {
    container.replaceChildren(div("empty-state", "no training jobs"));
    return;
  }
  container.replaceChildren(...rows);
}

export function renderTeachPanel(
  container: HTMLElement,
  model: ViewModel,
  onStop: (success: boolean) => void,
) {
  if (!model.teach.active) {
    container.replaceChildren(div("empty-state", "no teach session"));
    return;
  }
  const panel = div("teach-panel");
  panel.appendChild(div("teach-skill", `teaching ${model.teach.skill ?? ""}`));
  const counter = div("frame-counter", `${model.teach.frames} frames`);
  counter.setAttribute("data-role", "frame-counter");
  panel.appendChild(counter);
  // stop is only reachable while a session is active, so the service
  // can never see a stop without a start
  panel.appendChild(button("finish demonstration", "stop-ok", () => onStop(true)));
  panel.appendChild(button("discard", "stop-bad", () => onStop(false)));
  container.replaceChildren(panel);
}

export function renderBenchmarks(container: HTMLElement, model: ViewModel) {
  if (model.benchmarks.length === 0) {
    container.replaceChildren(div("empty-state", "no benchmark reports"));
    return;
  }
  const table = document.createElement("table");
  table.className = "benchmarks";
  const head = table.createTHead().insertRow();
  for (const label of ["benchmark", "cases", "score"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  const body = table.createTBody();
  for (const bench of model.benchmarks) {
    const row = body.insertRow();
    row.insertCell().textContent = String(bench["name"] ?? "benchmark");
    row.insertCell().textContent = String(bench.cases);
    const score =
      typeof bench.accuracy === "number"
        ? bench.accuracy
        : typeof bench["combined_score"] === "number"
          ? (bench["combined_score"] as number)
          : null;
    row.insertCell().textContent = score === null ? "-" : percent(score);
  }
  container.replaceChildren(table);
}
