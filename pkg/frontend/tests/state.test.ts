import { describe, expect, it } from "vitest";

import { Snapshot } from "../src/protocol.js";
import {
  STALE_AFTER_MS,
  hasPendingMutation,
  initialState,
  jointIds,
  reduce,
} from "../src/state.js";

export function fakeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    time_s: 1.25,
    busy: null,
    modules: [
      {
        id: "limbA",
        kind: "limb",
        drive_axes: [],
        ports: [
          { id: "base", kind: "gripper", state: "closed", linked: true },
          { id: "tool", kind: "gripper", state: "open", linked: false },
        ],
        joints: [
          { id: "limbA.j1", pos_rev: 0.01, vel_rev_s: 0, current_a: 0.64, setpoint_rev: 0.01, mode: "trapezoidal" },
          { id: "limbA.j2", pos_rev: 0.1, vel_rev_s: 0.02, current_a: 0.7, setpoint_rev: 0.12, mode: "trapezoidal" },
          { id: "limbA.j3", pos_rev: -0.2, vel_rev_s: 0, current_a: 0.64, setpoint_rev: -0.2, mode: "trapezoidal" },
          { id: "limbA.j4", pos_rev: 0, vel_rev_s: 0, current_a: 0.64, setpoint_rev: 0, mode: "trapezoidal" },
        ],
      },
      {
        id: "pallet",
        kind: "pallet",
        drive_axes: [],
        ports: [{ id: "fx1", kind: "fixture", state: null, linked: true }],
        joints: [],
      },
    ],
    edges: [["limbA:base", "pallet:fx1", "male_into_fixture"]],
    base_poses: {},
    classification: {},
    wheel_speeds_rad_s: {},
    ...overrides,
  };
}

describe("reducer", () => {
  it("tracks connection status", () => {
    let s = initialState();
    s = reduce(s, { kind: "socket_open" });
    expect(s.status).toBe("connected");
    s = reduce(s, { kind: "socket_closed" });
    expect(s.status).toBe("disconnected");
  });

  it("stores snapshots verbatim and clears staleness", () => {
    let s = reduce(initialState(), { kind: "socket_open" });
    const snap = fakeSnapshot();
    s = reduce(s, { kind: "server", event: { kind: "snapshot", body: snap }, now: 1000 });
    expect(s.snapshot).toBe(snap); // no copying, no extrapolation
    expect(s.stale).toBe(false);
    s = reduce(s, { kind: "tick", now: 1000 + STALE_AFTER_MS + 1 });
    expect(s.stale).toBe(true);
    s = reduce(s, { kind: "server", event: { kind: "snapshot", body: snap }, now: 3000 });
    expect(s.stale).toBe(false);
  });

  it("pairs acks with pending commands", () => {
    let s = reduce(initialState(), { kind: "socket_open" });
    s = reduce(s, {
      kind: "command_sent",
      command: { id: "ui1", type: "joint", joint: "limbA.j1", target_rev: 0.02 },
      now: 50,
    });
    expect(hasPendingMutation(s)).toBe(true);
    s = reduce(s, { kind: "server", event: { kind: "ack", id: "ui1", result: {} }, now: 70 });
    expect(hasPendingMutation(s)).toBe(false);
    expect(s.lastAckAt).toBe(70);
  });

  it("errors clear pending commands and raise a toast with the code", () => {
    let s = reduce(initialState(), { kind: "socket_open" });
    s = reduce(s, {
      kind: "command_sent",
      command: { id: "ui2", type: "attach", port_a: "a:b", port_b: "c:d" },
      now: 10,
    });
    s = reduce(s, {
      kind: "server",
      event: { kind: "error", id: "ui2", code: "MONOGAMY_VIOLATION", message: "port busy" },
      now: 20,
    });
    expect(hasPendingMutation(s)).toBe(false);
    expect(s.lastErrorCode).toBe("MONOGAMY_VIOLATION");
    expect(s.toast).toContain("MONOGAMY_VIOLATION");
  });

  it("counts dropped telemetry batches", () => {
    let s = reduce(initialState(), { kind: "socket_open" });
    s = reduce(s, {
      kind: "server",
      event: { kind: "telemetry", dropped: 3, t_latest_s: 1, records: [] },
      now: 5,
    });
    expect(s.dropped).toBe(3);
  });

  it("lists joints from the snapshot", () => {
    const snap = fakeSnapshot();
    expect(jointIds(snap)).toEqual(["limbA.j1", "limbA.j2", "limbA.j3", "limbA.j4"]);
  });
});
