// Socket lifecycle: connect, authenticate, subscribe to telemetry, and
// reconnect with resubscription when the server goes away.

import { CommandMessage, parseServerEvent, ServerEvent } from "./protocol.js";

const SOCKET_OPEN = 1; // WebSocket.OPEN; the global class is absent under node tests

export interface SessionCallbacks {
  onOpen: () => void;
  onEvent: (event: ServerEvent) => void;
  onAuthFailed: () => void;
  onClosed: () => void;
  onCommandSent: (command: CommandMessage) => void;
}

export interface SessionOptions {
  endpoint: string;
  token?: string;
  telemetryHz?: number;
  reconnectDelayMs?: number;
  makeSocket?: (url: string) => WebSocket;
}

export class Session {
  private socket: WebSocket | null = null;
  private closedByUser = false;
  private authFailed = false;
  private n = 0;

  constructor(private options: SessionOptions, private callbacks: SessionCallbacks) {}

  connect(): void {
    this.closedByUser = false;
    const make = this.options.makeSocket ?? ((url: string) => new WebSocket(url));
    const socket = make(this.options.endpoint);
    this.socket = socket;
    socket.onopen = () => {
      if (this.options.token) {
        this.sendRaw({ id: this.autoId(), type: "auth", token: this.options.token });
      }
      this.sendRaw({
        id: this.autoId(),
        type: "query",
        what: "telemetry",
        rate_hz: this.options.telemetryHz ?? 10,
      });
      this.sendRaw({ id: this.autoId(), type: "query", what: "snapshot" });
      this.callbacks.onOpen();
    };
    socket.onmessage = (msg: MessageEvent) => {
      const event = parseServerEvent(String(msg.data));
      if (!event) return;
      if (event.kind === "error" && event.code === "AUTH_FAILED") {
        this.authFailed = true;
        this.callbacks.onAuthFailed();
      }
      if (event.kind === "ack" && "snapshot" in (event.result ?? {})) {
        // unwrap the snapshot query reply so consumers see one event shape
        this.callbacks.onEvent({
          kind: "snapshot",
          body: (event.result as { snapshot: never }).snapshot,
        });
        return;
      }
      this.callbacks.onEvent(event);
    };
    socket.onclose = () => {
      this.callbacks.onClosed();
      if (!this.closedByUser && !this.authFailed) {
        const delay = this.options.reconnectDelayMs ?? 500;
        setTimeout(() => this.connect(), delay); // resubscribes in onopen
      }
    };
    socket.onerror = () => {
      /* onclose follows */
    };
  }

  private autoId(): string {
    this.n += 1;
    return `s${this.n}`;
  }

  private sendRaw(command: CommandMessage): void {
    if (this.socket && this.socket.readyState === SOCKET_OPEN) {
      this.socket.send(JSON.stringify(command));
    }
  }

  send(command: CommandMessage): boolean {
    if (!this.socket || this.socket.readyState !== SOCKET_OPEN) return false;
    this.socket.send(JSON.stringify(command));
    this.callbacks.onCommandSent(command);
    return true;
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }
}
