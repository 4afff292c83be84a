/**
 * WebSocket session against the gateway console endpoint.
 *
 * Reconnects with doubling backoff (0.5 s up to 8 s) and surfaces the
 * connection state; events are parsed and handed to the caller in arrival
 * order. Commands sent while disconnected are refused (returned false),
 * never queued: the UI stays a pure function of acknowledged events.
 */

import { ConsoleCommand, ConsoleEvent, parseEvent, serializeCommand } from "./protocol.js";

export interface SessionHooks {
  onEvent: (event: ConsoleEvent) => void;
  onStatus: (connected: boolean) => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class ConsoleSession {
  private socket: WebSocket | null = null;
  private backoffMs = BACKOFF_START_MS;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private url: string, private hooks: SessionHooks) {}

  connect(): void {
    if (this.closed) return;
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.hooks.onStatus(true);
    };
    socket.onmessage = (frame: MessageEvent) => {
      const event = parseEvent(String(frame.data));
      if (event !== null) this.hooks.onEvent(event);
    };
    socket.onclose = () => {
      this.hooks.onStatus(false);
      this.scheduleReconnect();
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.timer !== null) return;
    this.timer = setTimeout(() => {
      this.timer = null;
      this.connect();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
  }

  send(cmd: ConsoleCommand): boolean {
    if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) return false;
    this.socket.send(serializeCommand(cmd));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.socket?.close();
  }
}
