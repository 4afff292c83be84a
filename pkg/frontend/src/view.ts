/**
 * DOM + canvas rendering. Everything drawn here comes from the ViewState;
 * no rendering path reads the socket or mutates state.
 */

import { decisionBadge, LANE_AGENTS, ViewState } from "./state.js";

const LANE_COLORS: Record<string, string> = {
  sensor: "#7cb342",
  vision: "#42a5f5",
  chat: "#ffb300",
  action1: "#ef5350",
  action2: "#ab47bc",
  human: "#90a4ae",
};

export interface Dom {
  banner: HTMLElement;
  badge: HTMLElement;
  chatLog: HTMLElement;
  lanes: HTMLElement;
  gauges: HTMLElement;
  errorLine: HTMLElement;
  canvas: HTMLCanvasElement;
}

export function grabDom(): Dom {
  const byId = (id: string): HTMLElement => {
    const el = document.getElementById(id);
    if (el === null) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    banner: byId("banner"),
    badge: byId("badge"),
    chatLog: byId("chat-log"),
    lanes: byId("lanes"),
    gauges: byId("gauges"),
    errorLine: byId("error-line"),
    canvas: byId("world") as HTMLCanvasElement,
  };
}

const GAUGE_FIELDS: Array<[string, string, number]> = [
  ["moisture", "%", 100],
  ["temperature", "C", 40],
  ["ph", "", 14],
  ["ec", "mS/cm", 5],
  ["n", "mg/kg", 100],
  ["p", "mg/kg", 100],
  ["k", "mg/kg", 100],
];

export function render(state: ViewState, dom: Dom): void {
  dom.banner.textContent = state.connected ? "connected" : "disconnected — retrying";
  dom.banner.className = state.connected ? "banner ok" : "banner down";

  const badge = decisionBadge(state);
  dom.badge.textContent = badge;
  dom.badge.className = `badge ${badge === "Move" ? "move" : badge === "Stop" ? "stop" : "none"}`;

  dom.chatLog.replaceChildren(
    ...state.chat.slice(-40).map((entry) => {
      const row = document.createElement("div");
      row.className = `chat-row ${entry.who}`;
      row.textContent = `${entry.who === "visitor" ? "you" : "plantbot"}: ${entry.text}`;
      return row;
    }),
  );
  dom.chatLog.scrollTop = dom.chatLog.scrollHeight;

  dom.lanes.replaceChildren(
    ...LANE_AGENTS.map((agent) => {
      const column = document.createElement("div");
      column.className = "lane";
      const head = document.createElement("h3");
      head.textContent = agent;
      head.style.color = LANE_COLORS[agent] ?? "#ccc";
      column.appendChild(head);
      for (const msg of (state.lanes[agent] ?? []).slice(-8)) {
        const row = document.createElement("div");
        row.className = "lane-msg";
        row.textContent = msg.text;
        column.appendChild(row);
      }
      return column;
    }),
  );

  dom.gauges.replaceChildren(
    ...GAUGE_FIELDS.map(([field, unit, max]) => {
      const value = state.soil === null
        ? null
        : (state.soil as unknown as Record<string, number>)[field] ?? null;
      const wrap = document.createElement("div");
      wrap.className = "gauge";
      const label = document.createElement("span");
      label.textContent = `${field} ${value === null ? "—" : value.toFixed(1)}${unit}`;
      const bar = document.createElement("progress");
      bar.max = max;
      bar.value = value ?? 0;
      wrap.append(label, bar);
      return wrap;
    }),
  );

  dom.errorLine.textContent = state.lastError === null
    ? ""
    : `error (${state.lastError.agent}): ${state.lastError.text}`;

  drawWorld(state, dom.canvas);
}

function drawWorld(state: ViewState, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = canvas;
  ctx.fillStyle = "#10151a";
  ctx.fillRect(0, 0, width, height);
  const scale = width / 14; // 14 m across
  const toX = (x: number) => width / 2 + x * scale;
  const toY = (y: number) => height / 2 - y * scale;

  ctx.strokeStyle = "#2c3b47";
  ctx.strokeRect(toX(-6), toY(6), 12 * scale, 12 * scale);

  if (state.pose === null) return;
  const { x, y, heading } = state.pose;

  // LiDAR rays: ray i points at heading + i * (2*pi / n), counter-clockwise.
  const n = state.scan.length;
  if (n > 0) {
    ctx.strokeStyle = "rgba(124, 179, 66, 0.25)";
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const angle = heading + (2 * Math.PI * i) / n;
      const range = state.scan[i] ?? 0;
      ctx.moveTo(toX(x), toY(y));
      ctx.lineTo(toX(x + range * Math.cos(angle)), toY(y + range * Math.sin(angle)));
    }
    ctx.stroke();
    ctx.fillStyle = "#7cb342";
    for (let i = 0; i < n; i++) {
      const angle = heading + (2 * Math.PI * i) / n;
      const range = state.scan[i] ?? 0;
      if (range < 9.5) {
        ctx.fillRect(toX(x + range * Math.cos(angle)) - 1.5,
                     toY(y + range * Math.sin(angle)) - 1.5, 3, 3);
      }
    }
  }

  ctx.strokeStyle = "#546e7a";
  ctx.beginPath();
  for (let i = 0; i < state.trail.length; i++) {
    const p = state.trail[i];
    if (p === undefined) continue;
    if (i === 0) ctx.moveTo(toX(p.x), toY(p.y));
    else ctx.lineTo(toX(p.x), toY(p.y));
  }
  ctx.stroke();

  // Robot: a triangle pointing along the heading.
  ctx.fillStyle = "#ffb300";
  ctx.beginPath();
  const size = 0.24 * scale;
  ctx.moveTo(toX(x + 0.3 * Math.cos(heading)), toY(y + 0.3 * Math.sin(heading)));
  ctx.lineTo(toX(x) + size * Math.cos(heading + (3 * Math.PI) / 4) * 0.9,
             toY(y) - size * Math.sin(heading + (3 * Math.PI) / 4) * 0.9);
  ctx.lineTo(toX(x) + size * Math.cos(heading - (3 * Math.PI) / 4) * 0.9,
             toY(y) - size * Math.sin(heading - (3 * Math.PI) / 4) * 0.9);
  ctx.closePath();
  ctx.fill();
}
