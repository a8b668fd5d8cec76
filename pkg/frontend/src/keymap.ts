// Keyboard bindings: editable config mapping keys to teleop actions.
// Jog keys emit incremental joint commands (or IK deltas in IK mode);
// unbound keys produce nothing.

import { CommandMessage } from "./protocol.js";
import { UiState, hasPendingMutation, jointIds } from "./state.js";

export interface KeyBindings {
  jogPlus: string;
  jogMinus: string;
  ikX: [string, string]; // [+x, -x]
  ikY: [string, string];
  ikZ: [string, string];
  nextJoint: string;
  prevJoint: string;
  toggleIk: string;
  gripperToggle: string;
  sequences: Record<string, string>; // key -> script name
  jointStepRev: number;
  ikStepM: number;
}

export const DEFAULT_BINDINGS: KeyBindings = {
  jogPlus: "]",
  jogMinus: "[",
  ikX: ["d", "a"],
  ikY: ["w", "s"],
  ikZ: ["e", "q"],
  nextJoint: "j",
  prevJoint: "k",
  toggleIk: "i",
  gripperToggle: "g",
  sequences: { "1": "limb_to_limb", "2": "limb_to_wheel", "3": "inchworm" },
  jointStepRev: 0.01,
  ikStepM: 0.005,
};

let counter = 0;
export function nextCommandId(): string {
  counter += 1;
  return `ui${counter}`;
}

/** Local UI effects of a key (selection changes), or null. */
export function keyToLocalAction(
  key: string,
  state: UiState,
  bindings: KeyBindings = DEFAULT_BINDINGS
): { kind: "select_joint"; joint: string } | { kind: "toggle_ik" } | null {
  const joints = jointIds(state.snapshot);
  if (key === bindings.toggleIk) return { kind: "toggle_ik" };
  if ((key === bindings.nextJoint || key === bindings.prevJoint) && joints.length > 0) {
    const index = state.selectedJoint ? joints.indexOf(state.selectedJoint) : -1;
    const step = key === bindings.nextJoint ? 1 : -1;
    const next = joints[(index + step + joints.length) % joints.length];
    return { kind: "select_joint", joint: next };
  }
  return null;
}

/** Command for a key press, or null when unbound or not currently legal. */
export function keyToCommand(
  key: string,
  state: UiState,
  bindings: KeyBindings = DEFAULT_BINDINGS
): CommandMessage | null {
  if (state.status !== "connected" || state.snapshot === null) return null;

  const sequence = bindings.sequences[key];
  if (sequence) {
    return { id: nextCommandId(), type: "run_sequence", name: sequence };
  }

  if (key === bindings.gripperToggle && state.selectedJoint) {
    const moduleId = state.selectedJoint.split(".")[0];
    const module = state.snapshot.modules.find((m) => m.id === moduleId);
    const tool = module?.ports.find((p) => p.id === "tool");
    if (!tool) return null;
    return {
      id: nextCommandId(),
      type: "gripper",
      port: `${moduleId}:tool`,
      action: tool.state === "closed" ? "open" : "close",
    };
  }

  // jogs: at most one unacknowledged mutation per key-repeat cycle
  if (hasPendingMutation(state)) return null;

  if (state.ikMode && state.selectedChain) {
    const axes: [string, string][] = [bindings.ikX, bindings.ikY, bindings.ikZ];
    for (let axis = 0; axis < 3; axis++) {
      const [plus, minus] = axes[axis];
      if (key === plus || key === minus) {
        const delta = [0, 0, 0];
        delta[axis] = key === plus ? bindings.ikStepM : -bindings.ikStepM;
        return {
          id: nextCommandId(),
          type: "ik",
          root: state.selectedChain.root,
          tip: state.selectedChain.tip,
          delta_m: delta,
        };
      }
    }
  }

  if (!state.ikMode && state.selectedJoint && (key === bindings.jogPlus || key === bindings.jogMinus)) {
    const joint = state.snapshot.modules
      .flatMap((m) => m.joints)
      .find((j) => j.id === state.selectedJoint);
    if (!joint) return null;
    const step = key === bindings.jogPlus ? bindings.jointStepRev : -bindings.jointStepRev;
    return {
      id: nextCommandId(),
      type: "joint",
      joint: joint.id,
      target_rev: joint.setpoint_rev + step,
    };
  }
  return null;
}
