import { describe, expect, it } from "vitest";

import { DEFAULT_BINDINGS, keyToCommand, keyToLocalAction } from "../src/keymap.js";
import { initialState, reduce, UiState } from "../src/state.js";
import { fakeSnapshot } from "./state.test.js";

function connectedState(): UiState {
  let s = reduce(initialState(), { kind: "socket_open" });
  s = reduce(s, { kind: "server", event: { kind: "snapshot", body: fakeSnapshot() }, now: 1 });
  s = reduce(s, { kind: "select_joint", joint: "limbA.j2" });
  s = reduce(s, { kind: "select_chain", root: "limbA:base", tip: "limbA:tool" });
  return s;
}

describe("keyToCommand", () => {
  it("jog key emits an incremental joint command from the snapshot setpoint", () => {
    const cmd = keyToCommand("]", connectedState());
    expect(cmd).not.toBeNull();
    expect(cmd!.type).toBe("joint");
    expect(cmd!.joint).toBe("limbA.j2");
    // snapshot setpoint 0.12 + default 0.01 rev step
    expect(cmd!.target_rev).toBeCloseTo(0.13, 12);
    const minus = keyToCommand("[", connectedState());
    expect(minus!.target_rev).toBeCloseTo(0.11, 12);
  });

  it("ik mode jogs emit 5 mm deltas on the selected chain", () => {
    let s = connectedState();
    s = reduce(s, { kind: "toggle_ik" });
    const cmd = keyToCommand("d", s);
    expect(cmd!.type).toBe("ik");
    expect(cmd!.root).toBe("limbA:base");
    expect(cmd!.delta_m).toEqual([DEFAULT_BINDINGS.ikStepM, 0, 0]);
    const down = keyToCommand("q", s);
    expect(down!.delta_m).toEqual([0, 0, -DEFAULT_BINDINGS.ikStepM]);
  });

  it("unbound keys produce nothing", () => {
    expect(keyToCommand("z", connectedState())).toBeNull();
    expect(keyToCommand("Escape", connectedState())).toBeNull();
  });

  it("at most one pending mutation per repeat cycle", () => {
    let s = connectedState();
    const first = keyToCommand("]", s)!;
    s = reduce(s, { kind: "command_sent", command: first, now: 5 });
    expect(keyToCommand("]", s)).toBeNull(); // still pending
    s = reduce(s, { kind: "server", event: { kind: "ack", id: first.id, result: {} }, now: 9 });
    expect(keyToCommand("]", s)).not.toBeNull();
  });

  it("gripper key toggles based on the snapshot state", () => {
    const cmd = keyToCommand("g", connectedState());
    expect(cmd!.type).toBe("gripper");
    expect(cmd!.port).toBe("limbA:tool");
    expect(cmd!.action).toBe("close"); // snapshot says tool is open
  });

  it("sequence hotkeys dispatch run_sequence", () => {
    const cmd = keyToCommand("1", connectedState());
    expect(cmd!.type).toBe("run_sequence");
    expect(cmd!.name).toBe("limb_to_limb");
  });

  it("nothing is emitted before a snapshot arrives", () => {
    const s = reduce(initialState(), { kind: "socket_open" });
    expect(keyToCommand("]", s)).toBeNull();
  });
});

describe("keyToLocalAction", () => {
  it("cycles joint selection", () => {
    const s = connectedState();
    const next = keyToLocalAction("j", s);
    expect(next).toEqual({ kind: "select_joint", joint: "limbA.j3" });
    const prev = keyToLocalAction("k", s);
    expect(prev).toEqual({ kind: "select_joint", joint: "limbA.j1" });
  });

  it("toggles ik mode", () => {
    expect(keyToLocalAction("i", connectedState())).toEqual({ kind: "toggle_ik" });
  });
});
