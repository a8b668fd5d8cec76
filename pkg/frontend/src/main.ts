// Entry point: wire the socket session, the reducer, keyboard input, and the
// renderer together on the browser's single-threaded event loop.

import { Session } from "./connection.js";
import { DEFAULT_BINDINGS, keyToCommand, keyToLocalAction } from "./keymap.js";
import { initialState, reduce, UiEvent, UiState, jointIds } from "./state.js";
import { bindViews, render } from "./render.js";

const params = new URLSearchParams(location.search);
const endpoint = params.get("ws") ?? `ws://${location.hostname}:8765`;
const token = params.get("token") ?? undefined;

let state: UiState = initialState();
const views = bindViews(document);

function dispatch(event: UiEvent): void {
  state = reduce(state, event);
  render(state, views, document);
}

const session = new Session(
  { endpoint, token, telemetryHz: 10 },
  {
    onOpen: () => dispatch({ kind: "socket_open" }),
    onClosed: () => dispatch({ kind: "socket_closed" }),
    onAuthFailed: () => dispatch({ kind: "auth_failed" }),
    onEvent: (event) => {
      dispatch({ kind: "server", event, now: performance.now() });
      // first snapshot: select something useful by default
      if (event.kind === "snapshot" && state.selectedJoint === null) {
        const joints = jointIds(state.snapshot);
        if (joints.length > 0) dispatch({ kind: "select_joint", joint: joints[0] });
        const limb = state.snapshot?.modules.find((m) => m.joints.length === 4);
        if (limb) {
          dispatch({ kind: "select_chain", root: `${limb.id}:base`, tip: `${limb.id}:tool` });
        }
      }
    },
    onCommandSent: (command) =>
      dispatch({ kind: "command_sent", command, now: performance.now() }),
  }
);
session.connect();

document.addEventListener("keydown", (event: KeyboardEvent) => {
  const local = keyToLocalAction(event.key, state, DEFAULT_BINDINGS);
  if (local) {
    dispatch(local);
    return;
  }
  const command = keyToCommand(event.key, state, DEFAULT_BINDINGS);
  if (command) session.send(command);
});

// stale-snapshot watchdog (1 s silence -> badge)
setInterval(() => dispatch({ kind: "tick", now: performance.now() }), 250);
