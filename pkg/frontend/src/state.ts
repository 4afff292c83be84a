/**
 * Console view model, event-sourced.
 *
 * The whole view derives from the received event stream through one pure
 * reducer: replaying a recorded stream into `applyAll` reconstructs exactly
 * the state a live session ended with. Sending a command never mutates
 * state here; the UI changes only when the acknowledging event arrives.
 */

import type { ConsoleEvent, SoilEvent } from "./protocol.js";

export const LANE_AGENTS = ["sensor", "vision", "chat", "action1", "action2", "human"] as const;
const LANE_LIMIT = 50;
const CHAT_LIMIT = 200;

export interface ChatEntry {
  who: "visitor" | "plantbot";
  text: string;
  ts: number;
}

export interface LaneMessage {
  text: string;
  ts: number;
}

export interface Pose {
  x: number;
  y: number;
  heading: number;
}

export interface DecisionState {
  flag: 0 | 1;
  text: string;
  ts: number;
}

export interface ViewState {
  connected: boolean;
  chat: ChatEntry[];
  lanes: Record<string, LaneMessage[]>;
  pose: Pose | null;
  trail: Pose[];
  scan: number[];
  soil: Omit<SoilEvent, "event" | "ts"> | null;
  decision: DecisionState | null;
  lastError: { agent: string; text: string; ts: number } | null;
  lastEventTs: number | null;
  eventCount: number;
}

export function initialState(): ViewState {
  const lanes: Record<string, LaneMessage[]> = {};
  for (const agent of LANE_AGENTS) lanes[agent] = [];
  return {
    connected: false,
    chat: [],
    lanes,
    pose: null,
    trail: [],
    scan: [],
    soil: null,
    decision: null,
    lastError: null,
    lastEventTs: null,
    eventCount: 0,
  };
}

function pushBounded<T>(items: T[], item: T, limit: number): T[] {
  const next = items.concat([item]);
  return next.length > limit ? next.slice(next.length - limit) : next;
}

function withLane(state: ViewState, agent: string, msg: LaneMessage): Record<string, LaneMessage[]> {
  const existing = state.lanes[agent] ?? [];
  return { ...state.lanes, [agent]: pushBounded(existing, msg, LANE_LIMIT) };
}

/** Pure reducer: returns a new state, never mutates the input. */
export function applyEvent(state: ViewState, event: ConsoleEvent): ViewState {
  const base: ViewState = {
    ...state,
    lastEventTs: event.ts,
    eventCount: state.eventCount + 1,
  };
  switch (event.event) {
    case "chat_reply":
      return {
        ...base,
        chat: pushBounded(state.chat, { who: "plantbot", text: event.text, ts: event.ts }, CHAT_LIMIT),
        lanes: withLane(state, "chat", { text: event.text, ts: event.ts }),
      };
    case "agent_msg": {
      const next = { ...base, lanes: withLane(state, event.agent, { text: event.text, ts: event.ts }) };
      if (event.agent === "human") {
        next.chat = pushBounded(state.chat, { who: "visitor", text: event.text, ts: event.ts }, CHAT_LIMIT);
      }
      return next;
    }
    case "decision":
      return {
        ...base,
        decision: { flag: event.flag, text: event.text, ts: event.ts },
        lanes: withLane(state, "action1", { text: event.text, ts: event.ts }),
      };
    case "pose": {
      const pose = { x: event.x, y: event.y, heading: event.heading };
      return {
        ...base,
        pose,
        trail: pushBounded(state.trail, pose, 300),
        scan: event.scan ?? state.scan,
      };
    }
    case "soil": {
      const { event: _kind, ts: _ts, ...reading } = event;
      return { ...base, soil: reading };
    }
    case "error":
      return { ...base, lastError: { agent: event.agent, text: event.text, ts: event.ts } };
  }
}

export function applyAll(state: ViewState, events: ConsoleEvent[]): ViewState {
  return events.reduce(applyEvent, state);
}

export function setConnected(state: ViewState, connected: boolean): ViewState {
  return state.connected === connected ? state : { ...state, connected };
}

export function decisionBadge(state: ViewState): "Move" | "Stop" | "—" {
  if (state.decision === null) return "—";
  return state.decision.flag === 1 ? "Move" : "Stop";
}
