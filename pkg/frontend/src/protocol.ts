/**
 * Gateway console protocol: one JSON object per message, both directions.
 *
 * The transport is a WebSocket in the browser (one object per text frame)
 * or newline-delimited JSON over plain TCP elsewhere; the objects are
 * identical. This module only encodes/decodes, it never touches state.
 */

export interface AgentMsgEvent {
  event: "agent_msg";
  ts: number;
  agent: string;
  text: string;
}

export interface ChatReplyEvent {
  event: "chat_reply";
  ts: number;
  text: string;
}

export interface DecisionEvent {
  event: "decision";
  ts: number;
  flag: 0 | 1;
  text: string;
}

export interface PoseEvent {
  event: "pose";
  ts: number;
  x: number;
  y: number;
  heading: number;
  scan?: number[];
}

export interface SoilEvent {
  event: "soil";
  ts: number;
  moisture: number;
  temperature: number;
  ph: number;
  ec: number;
  n: number;
  p: number;
  k: number;
  condition: string;
}

export interface ErrorEvent {
  event: "error";
  ts: number;
  agent: string;
  text: string;
}

export type ConsoleEvent =
  | AgentMsgEvent
  | ChatReplyEvent
  | DecisionEvent
  | PoseEvent
  | SoilEvent
  | ErrorEvent;

export type ConsoleCommand =
  | { cmd: "user_utterance"; text: string }
  | { cmd: "set_soil_moisture"; value: number }
  | { cmd: "water"; liters: number }
  | { cmd: "add_obstacle"; x: number; y: number; r: number }
  | { cmd: "pause" }
  | { cmd: "resume" };

const EVENT_KINDS = new Set([
  "agent_msg", "chat_reply", "decision", "pose", "soil", "error",
]);

/** Parse one wire message; returns null for anything malformed or unknown. */
export function parseEvent(raw: string): ConsoleEvent | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const record = obj as Record<string, unknown>;
  if (typeof record.event !== "string" || !EVENT_KINDS.has(record.event)) return null;
  if (typeof record.ts !== "number") return null;
  switch (record.event) {
    case "agent_msg":
    case "error":
      if (typeof record.agent !== "string" || typeof record.text !== "string") return null;
      break;
    case "chat_reply":
      if (typeof record.text !== "string") return null;
      break;
    case "decision":
      if (record.flag !== 0 && record.flag !== 1) return null;
      break;
    case "pose":
      if (typeof record.x !== "number" || typeof record.y !== "number" ||
          typeof record.heading !== "number") return null;
      break;
    case "soil":
      if (typeof record.moisture !== "number") return null;
      break;
  }
  return record as unknown as ConsoleEvent;
}

export function serializeCommand(cmd: ConsoleCommand): string {
  return JSON.stringify(cmd);
}
