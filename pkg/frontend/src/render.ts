// DOM rendering: connection banner, configuration graph (nodes, edges, port
// states), joint panel, limb side view, and the event log.  Every number
// shown comes straight from the latest snapshot.

import { limbSideView } from "./fk.js";
import { Snapshot } from "./protocol.js";
import { UiState } from "./state.js";

export interface ViewRoot {
  status: HTMLElement;
  graph: HTMLElement;
  joints: HTMLElement;
  sideview: HTMLElement;
  log: HTMLElement;
  toast: HTMLElement;
}

export function bindViews(document: Document): ViewRoot {
  const get = (id: string) => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el as HTMLElement;
  };
  return {
    status: get("status"),
    graph: get("graph"),
    joints: get("joints"),
    sideview: get("sideview"),
    log: get("log"),
    toast: get("toast"),
  };
}

export function render(state: UiState, views: ViewRoot, document: Document): void {
  renderStatus(state, views.status);
  renderToast(state, views.toast);
  if (state.snapshot) {
    renderGraph(state.snapshot, state, views.graph, document);
    renderJoints(state.snapshot, state, views.joints, document);
    renderSideView(state.snapshot, state, views.sideview);
  }
  renderLog(state, views.log, document);
}

function renderStatus(state: UiState, el: HTMLElement): void {
  const bits: string[] = [state.status];
  if (state.stale) bits.push("STALE");
  if (state.snapshot?.busy) bits.push(`busy: ${state.snapshot.busy}`);
  if (state.ikMode) bits.push("IK mode");
  if (state.selectedJoint) bits.push(`joint: ${state.selectedJoint}`);
  if (state.dropped > 0) bits.push(`dropped ${state.dropped} batches`);
  el.textContent = bits.join(" | ");
  el.dataset.status = state.status;
  el.dataset.stale = state.stale ? "1" : "0";
}

function renderToast(state: UiState, el: HTMLElement): void {
  el.textContent = state.toast ?? "";
  el.style.display = state.toast ? "block" : "none";
  if (state.lastErrorCode) el.dataset.code = state.lastErrorCode;
}

function renderGraph(snapshot: Snapshot, state: UiState, el: HTMLElement, document: Document): void {
  el.replaceChildren();
  for (const module of snapshot.modules) {
    const node = document.createElement("div");
    node.className = `node kind-${module.kind}`;
    node.dataset.module = module.id;
    const title = document.createElement("strong");
    title.textContent = `${module.id} (${module.kind})`;
    node.appendChild(title);
    for (const port of module.ports) {
      const badge = document.createElement("span");
      badge.className = "port";
      badge.dataset.port = `${module.id}:${port.id}`;
      badge.dataset.linked = port.linked ? "1" : "0";
      const status = port.kind === "gripper" ? ` ${port.state}` : "";
      badge.textContent = `${port.id}[${port.kind}${status}${port.linked ? " linked" : ""}]`;
      node.appendChild(badge);
    }
    el.appendChild(node);
  }
  const edges = document.createElement("ul");
  edges.className = "edges";
  for (const [a, b, kind] of snapshot.edges) {
    const item = document.createElement("li");
    item.textContent = `${a} — ${b} (${kind})`;
    edges.appendChild(item);
  }
  el.appendChild(edges);
}

function renderJoints(snapshot: Snapshot, state: UiState, el: HTMLElement, document: Document): void {
  el.replaceChildren();
  const table = document.createElement("table");
  const head = document.createElement("tr");
  for (const column of ["joint", "pos [rev]", "vel [rev/s]", "current [A]", "setpoint"]) {
    const th = document.createElement("th");
    th.textContent = column;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const module of snapshot.modules) {
    for (const joint of module.joints) {
      const row = document.createElement("tr");
      row.dataset.joint = joint.id;
      if (joint.id === state.selectedJoint) row.className = "selected";
      const cells = [
        joint.id,
        String(joint.pos_rev),
        String(joint.vel_rev_s),
        String(joint.current_a),
        String(joint.setpoint_rev),
      ];
      for (const text of cells) {
        const td = document.createElement("td");
        td.textContent = text;
        row.appendChild(td);
      }
      table.appendChild(row);
    }
  }
  el.appendChild(table);
}

const TWO_PI = 2 * Math.PI;

function renderSideView(snapshot: Snapshot, state: UiState, el: HTMLElement): void {
  // pick the limb owning the selected joint, else the first limb
  const moduleId = state.selectedJoint?.split(".")[0];
  const limb =
    snapshot.modules.find((m) => m.id === moduleId && m.joints.length === 4) ??
    snapshot.modules.find((m) => m.joints.length === 4);
  if (!limb) {
    el.replaceChildren();
    return;
  }
  const j2 = (limb.joints[1]?.pos_rev ?? 0) * TWO_PI;
  const j3 = (limb.joints[2]?.pos_rev ?? 0) * TWO_PI;
  const points = limbSideView(j2, j3);
  const scale = 160; // px per metre
  const ox = 20;
  const oy = 160;
  const path = points
    .map(([x, z], i) => `${i === 0 ? "M" : "L"}${(ox + x * scale).toFixed(1)},${(oy - z * scale).toFixed(1)}`)
    .join(" ");
  el.innerHTML =
    `<svg width="320" height="200" viewBox="0 0 320 200">` +
    `<line x1="0" y1="${oy}" x2="320" y2="${oy}" stroke="#ccc"/>` +
    `<path d="${path}" fill="none" stroke="#2070d0" stroke-width="4" stroke-linecap="round"/>` +
    points
      .map(([x, z]) => `<circle cx="${(ox + x * scale).toFixed(1)}" cy="${(oy - z * scale).toFixed(1)}" r="5" fill="#123"/>`)
      .join("") +
    `</svg><div class="caption">${limb.id} side view (pitch plane)</div>`;
}

function renderLog(state: UiState, el: HTMLElement, document: Document): void {
  el.replaceChildren();
  for (const line of state.log.slice(-12)) {
    const div = document.createElement("div");
    div.className = `line ${line.level}`;
    div.textContent = line.text;
    el.appendChild(div);
  }
  el.scrollTop = el.scrollHeight;
}
