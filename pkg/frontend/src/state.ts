// Single state reducer: every socket event, key event, and clock tick funnels
// through reduce(); rendering reads the state and never fabricates values
// that are not in the latest snapshot.

import { CommandMessage, ServerEvent, Snapshot } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "auth_failed" | "disconnected";

export interface LogLine {
  t: number; // wall clock ms
  level: "info" | "error";
  text: string;
}

export interface UiState {
  status: ConnectionStatus;
  snapshot: Snapshot | null;
  snapshotReceivedAt: number; // wall clock ms of last snapshot
  stale: boolean; // no snapshot for > staleAfterMs
  selectedJoint: string | null;
  selectedChain: { root: string; tip: string } | null;
  ikMode: boolean; // jog keys emit IK deltas instead of joint deltas
  pendingCommands: Record<string, { type: string; sentAt: number }>;
  lastAckAt: number | null;
  lastErrorCode: string | null;
  toast: string | null;
  log: LogLine[];
  dropped: number; // dropped telemetry batches reported by the server
}

export const STALE_AFTER_MS = 1000;
const LOG_LIMIT = 200;

export function initialState(): UiState {
  return {
    status: "connecting",
    snapshot: null,
    snapshotReceivedAt: 0,
    stale: false,
    selectedJoint: null,
    selectedChain: null,
    ikMode: false,
    pendingCommands: {},
    lastAckAt: null,
    lastErrorCode: null,
    toast: null,
    log: [],
    dropped: 0,
  };
}

export type UiEvent =
  | { kind: "socket_open" }
  | { kind: "socket_closed" }
  | { kind: "auth_failed" }
  | { kind: "server"; event: ServerEvent; now: number }
  | { kind: "command_sent"; command: CommandMessage; now: number }
  | { kind: "select_joint"; joint: string | null }
  | { kind: "select_chain"; root: string; tip: string }
  | { kind: "toggle_ik" }
  | { kind: "tick"; now: number };

function pushLog(state: UiState, level: "info" | "error", text: string, t: number): LogLine[] {
  const log = [...state.log, { t, level, text }];
  return log.length > LOG_LIMIT ? log.slice(log.length - LOG_LIMIT) : log;
}

export function jointIds(snapshot: Snapshot | null): string[] {
  if (!snapshot) return [];
  return snapshot.modules.flatMap((m) => m.joints.map((j) => j.id));
}

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.kind) {
    case "socket_open":
      return { ...state, status: "connected", toast: null };
    case "socket_closed":
      return { ...state, status: state.status === "auth_failed" ? "auth_failed" : "disconnected" };
    case "auth_failed":
      return { ...state, status: "auth_failed", toast: "authentication failed" };
    case "select_joint":
      return { ...state, selectedJoint: event.joint };
    case "select_chain":
      return { ...state, selectedChain: { root: event.root, tip: event.tip } };
    case "toggle_ik":
      return { ...state, ikMode: !state.ikMode };
    case "command_sent": {
      const pending = { ...state.pendingCommands };
      pending[event.command.id] = { type: event.command.type, sentAt: event.now };
      return { ...state, pendingCommands: pending };
    }
    case "tick": {
      const stale =
        state.snapshotReceivedAt > 0 && event.now - state.snapshotReceivedAt > STALE_AFTER_MS;
      return stale === state.stale ? state : { ...state, stale };
    }
    case "server":
      return reduceServer(state, event.event, event.now);
  }
}

function reduceServer(state: UiState, event: ServerEvent, now: number): UiState {
  switch (event.kind) {
    case "snapshot":
      return { ...state, snapshot: event.body, snapshotReceivedAt: now, stale: false };
    case "telemetry":
      return event.dropped > 0 ? { ...state, dropped: state.dropped + event.dropped } : state;
    case "ack": {
      const pending = { ...state.pendingCommands };
      const known = event.id in pending;
      delete pending[event.id];
      return {
        ...state,
        pendingCommands: pending,
        lastAckAt: known ? now : state.lastAckAt,
        log: pushLog(state, "info", `ack ${event.id}`, now),
      };
    }
    case "error": {
      const pending = { ...state.pendingCommands };
      if (event.id !== null) delete pending[event.id];
      return {
        ...state,
        pendingCommands: pending,
        lastErrorCode: event.code,
        toast: `${event.code}: ${event.message}`,
        log: pushLog(state, "error", `${event.code} ${event.message}`, now),
      };
    }
    case "sequence_event": {
      const status = event.status;
      const line = `sequence ${event.id}: ${status}`;
      const failed = status === "failed";
      return {
        ...state,
        toast: failed ? line : state.toast,
        log: pushLog(state, failed ? "error" : "info", line, now),
      };
    }
  }
}

/** True while a mutating command is unacknowledged; one jog per repeat cycle. */
export function hasPendingMutation(state: UiState): boolean {
  return Object.values(state.pendingCommands).some((p) => p.type !== "query" && p.type !== "auth");
}
