// Wire protocol types: JSON messages over WebSocket text frames.
// Mirrors the service contract; units live in the key names.

export type CommandType =
  | "auth"
  | "joint"
  | "ik"
  | "gripper"
  | "attach"
  | "detach"
  | "run_sequence"
  | "set_mode"
  | "query";

export interface CommandMessage {
  id: string;
  type: CommandType;
  [key: string]: unknown;
}

export interface JointSnapshot {
  id: string;
  pos_rev: number;
  vel_rev_s: number;
  current_a: number;
  setpoint_rev: number;
  mode: string;
}

export interface PortSnapshot {
  id: string;
  kind: "gripper" | "fixture";
  state: "open" | "closed" | null;
  linked: boolean;
}

export interface ModuleSnapshot {
  id: string;
  kind: string;
  ports: PortSnapshot[];
  joints: JointSnapshot[];
  drive_axes: string[];
}

export interface Snapshot {
  time_s: number;
  busy: string | null;
  modules: ModuleSnapshot[];
  edges: [string, string, string][];
  base_poses: Record<string, { x_m: number; y_m: number; heading_rad: number }>;
  classification: Record<string, string | null>;
  wheel_speeds_rad_s: Record<string, number>;
}

export type ServerEvent =
  | { kind: "ack"; id: string; result: Record<string, unknown> }
  | { kind: "error"; id: string | null; code: string; message: string; details?: unknown }
  | { kind: "telemetry"; dropped: number; t_latest_s: number; records: [number, string, number, number, number][] }
  | { kind: "snapshot"; body: Snapshot }
  | { kind: "sequence_event"; id: string; status: string; body: Record<string, unknown> };

export function parseServerEvent(raw: string): ServerEvent | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null || !("kind" in msg)) return null;
  return msg as ServerEvent;
}
