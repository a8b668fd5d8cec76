// Integration against a live locally-served fleet: key jog to acked command
// and rendered joint change within the latency budget, error codes rendered,
// rendered values exactly matching snapshots, and reconnect after restart.

import { ChildProcess, spawn } from "node:child_process";
import { createServer } from "node:net";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Session } from "../src/connection.js";
import { keyToCommand } from "../src/keymap.js";
import { bindViews, render, ViewRoot } from "../src/render.js";
import { initialState, reduce, UiEvent, UiState, jointIds } from "../src/state.js";

const HOST = "127.0.0.1";
let port: number;
let server: ChildProcess | null = null;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, HOST, () => {
      const address = probe.address();
      if (typeof address === "object" && address) {
        const found = address.port;
        probe.close(() => resolve(found));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

function startServer(onPort: number): Promise<ChildProcess> {
  return new Promise((resolve, reject) => {
    const proc = spawn(
      "python3",
      ["-u", "-m", "limbsim.cli", "serve", "--fleet", "pallet_two_limbs", "--bind", `${HOST}:${onPort}`],
      { stdio: ["ignore", "pipe", "pipe"] }
    );
    let out = "";
    const timer = setTimeout(() => reject(new Error(`server never came up: ${out}`)), 20000);
    proc.stdout!.on("data", (chunk) => {
      out += String(chunk);
      if (out.includes("teleop service on")) {
        clearTimeout(timer);
        resolve(proc);
      }
    });
    proc.stderr!.on("data", (chunk) => (out += String(chunk)));
    proc.on("exit", (code) => {
      if (!out.includes("teleop service on")) {
        clearTimeout(timer);
        reject(new Error(`server exited ${code}: ${out}`));
      }
    });
  });
}

function stopServer(proc: ChildProcess | null): Promise<void> {
  return new Promise((resolve) => {
    if (!proc || proc.exitCode !== null) return resolve();
    proc.on("exit", () => resolve());
    proc.kill("SIGTERM");
    setTimeout(() => proc.kill("SIGKILL"), 3000).unref();
  });
}

interface Harness {
  session: Session;
  views: ViewRoot;
  state: () => UiState;
  dispatch: (event: UiEvent) => void;
  waitFor: (predicate: (s: UiState) => boolean, ms?: number) => Promise<UiState>;
  pressKey: (key: string) => boolean;
  close: () => void;
}

function makeHarness(token?: string): Harness {
  document.body.innerHTML = `
    <div id="status"></div><div id="graph"></div><div id="joints"></div>
    <div id="sideview"></div><div id="log"></div><div id="toast"></div>`;
  const views = bindViews(document);
  let state = initialState();
  const waiters: Array<[() => boolean, () => void]> = [];
  const dispatch = (event: UiEvent) => {
    state = reduce(state, event);
    render(state, views, document);
    for (let i = waiters.length - 1; i >= 0; i--) {
      if (waiters[i][0]()) {
        waiters[i][1]();
        waiters.splice(i, 1);
      }
    }
  };
  const session = new Session(
    {
      endpoint: `ws://${HOST}:${port}`,
      token,
      telemetryHz: 10,
      reconnectDelayMs: 200,
      makeSocket: (url) => new WebSocket(url) as unknown as globalThis.WebSocket,
    },
    {
      onOpen: () => dispatch({ kind: "socket_open" }),
      onClosed: () => dispatch({ kind: "socket_closed" }),
      onAuthFailed: () => dispatch({ kind: "auth_failed" }),
      onEvent: (event) => {
        dispatch({ kind: "server", event, now: performance.now() });
        if (event.kind === "snapshot" && state.selectedJoint === null) {
          const joints = jointIds(state.snapshot);
          if (joints.length > 0) dispatch({ kind: "select_joint", joint: joints[0] });
        }
      },
      onCommandSent: (command) =>
        dispatch({ kind: "command_sent", command, now: performance.now() }),
    }
  );
  session.connect();
  return {
    session,
    views,
    state: () => state,
    dispatch,
    waitFor: (predicate, ms = 15000) =>
      new Promise((resolve, reject) => {
        if (predicate(state)) return resolve(state);
        const timer = setTimeout(() => reject(new Error("waitFor timeout")), ms);
        waiters.push([
          () => predicate(state),
          () => {
            clearTimeout(timer);
            resolve(state);
          },
        ]);
      }),
    pressKey: (key: string) => {
      const command = keyToCommand(key, state);
      return command ? session.send(command) : false;
    },
    close: () => session.close(),
  };
}

beforeAll(async () => {
  port = await freePort();
  server = await startServer(port);
});

afterAll(async () => {
  await stopServer(server);
});

describe("console against a live service", () => {
  it("renders the fleet, jogs within the latency budget, and mirrors snapshots exactly", async () => {
    const ui = makeHarness();
    try {
      await ui.waitFor((s) => s.status === "connected" && s.snapshot !== null);
      expect(ui.views.graph.querySelectorAll(".node").length).toBe(3);

      // rendered joint values match the snapshot exactly (no extrapolation)
      let snap = ui.state().snapshot!;
      for (const module of snap.modules) {
        for (const joint of module.joints) {
          const row = ui.views.joints.querySelector(`[data-joint="${joint.id}"]`)!;
          const cells = row.querySelectorAll("td");
          expect(cells[1].textContent).toBe(String(joint.pos_rev));
          expect(cells[3].textContent).toBe(String(joint.current_a));
        }
      }

      // keyboard jog: ack AND a rendered joint change within 100 ms
      await ui.waitFor((s) => s.selectedJoint !== null);
      const joint = ui.state().selectedJoint!;
      const before = snap.modules
        .flatMap((m) => m.joints)
        .find((j) => j.id === joint)!.setpoint_rev;
      const t0 = performance.now();
      expect(ui.pressKey("]")).toBe(true);
      await ui.waitFor((s) => s.lastAckAt !== null && s.lastAckAt >= t0);
      const ackMs = ui.state().lastAckAt! - t0;
      await ui.waitFor((s) => {
        const row = ui.views.joints.querySelector(`[data-joint="${joint}"]`);
        const setpoint = row?.querySelectorAll("td")[4]?.textContent;
        return setpoint === String(before + 0.01);
      });
      const renderMs = performance.now() - t0;
      expect(ackMs).toBeLessThanOrEqual(100);
      expect(renderMs).toBeLessThanOrEqual(100);

      // a monogamy violation renders its error code
      ui.session.send({
        id: "bad1",
        type: "attach",
        port_a: "limbA:base",
        port_b: "limbB:base",
      });
      await ui.waitFor((s) => s.lastErrorCode !== null);
      expect(ui.state().lastErrorCode).toBe("MONOGAMY_VIOLATION");
      expect(ui.views.toast.dataset.code).toBe("MONOGAMY_VIOLATION");
      expect(ui.views.toast.textContent).toContain("MONOGAMY_VIOLATION");
    } finally {
      ui.close();
    }
  });

  it("reconnects and resubscribes after a server restart", async () => {
    const ui = makeHarness();
    try {
      await ui.waitFor((s) => s.status === "connected" && s.snapshot !== null);
      const firstTime = ui.state().snapshot!.time_s;
      await stopServer(server);
      server = null;
      await ui.waitFor((s) => s.status === "disconnected");
      server = await startServer(port);
      await ui.waitFor((s) => s.status === "connected");
      // resubscription brings fresh snapshots from the new server instance
      await ui.waitFor((s) => s.snapshot !== null && s.snapshot.time_s < firstTime + 0.5);
    } finally {
      ui.close();
    }
  });

  it("shows an auth banner on a bad token", async () => {
    const authPort = await freePort();
    const env = { ...process.env, LIMBSIM_TOKEN: "sesame" };
    const proc = spawn(
      "python3",
      ["-u", "-m", "limbsim.cli", "serve", "--fleet", "pallet_two_limbs", "--bind", `${HOST}:${authPort}`],
      { stdio: ["ignore", "pipe", "pipe"], env }
    );
    await new Promise<void>((resolve, reject) => {
      let out = "";
      const timer = setTimeout(() => reject(new Error("auth server never came up")), 20000);
      proc.stdout!.on("data", (chunk) => {
        out += String(chunk);
        if (out.includes("teleop service on")) {
          clearTimeout(timer);
          resolve();
        }
      });
    });
    const savedPort = port;
    port = authPort;
    const ui = makeHarness("wrong-token");
    port = savedPort;
    try {
      await ui.waitFor((s) => s.status === "auth_failed");
      expect(ui.views.status.textContent).toContain("auth_failed");
      expect(ui.views.toast.textContent).toContain("AUTH_FAILED");
    } finally {
      ui.close();
      await stopServer(proc);
    }
  });
});
