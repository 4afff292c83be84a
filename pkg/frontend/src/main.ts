/** Bootstrap: one session, one state, render on every event. */

import { ConsoleCommand } from "./protocol.js";
import { applyEvent, initialState, setConnected, ViewState } from "./state.js";
import { ConsoleSession } from "./session.js";
import { grabDom, render } from "./view.js";

function gatewayUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("gateway") ?? "ws://127.0.0.1:8765";
}

function main(): void {
  const dom = grabDom();
  let state: ViewState = initialState();

  const repaint = () => render(state, dom);

  const session = new ConsoleSession(gatewayUrl(), {
    onEvent: (event) => {
      state = applyEvent(state, event);
      repaint();
    },
    onStatus: (connected) => {
      state = setConnected(state, connected);
      repaint();
    },
  });
  session.connect();

  const input = document.getElementById("say") as HTMLInputElement;
  const sendCommand = (cmd: ConsoleCommand) => {
    if (!session.send(cmd)) {
      state = { ...state, lastError: { agent: "console", text: "not connected", ts: 0 } };
      repaint();
    }
  };

  (document.getElementById("say-form") as HTMLFormElement).onsubmit = (e) => {
    e.preventDefault();
    const text = input.value.trim();
    if (text.length > 0) {
      sendCommand({ cmd: "user_utterance", text });
      input.value = "";
    }
  };

  const moisture = document.getElementById("moisture") as HTMLInputElement;
  (document.getElementById("set-moisture") as HTMLButtonElement).onclick = () =>
    sendCommand({ cmd: "set_soil_moisture", value: Number(moisture.value) });
  (document.getElementById("water") as HTMLButtonElement).onclick = () =>
    sendCommand({ cmd: "water", liters: 1.0 });

  let paused = false;
  (document.getElementById("pause") as HTMLButtonElement).onclick = (e) => {
    paused = !paused;
    (e.target as HTMLButtonElement).textContent = paused ? "resume" : "pause";
    sendCommand({ cmd: paused ? "pause" : "resume" });
  };

  // Click on the world canvas to drop a 0.25 m obstacle there.
  const canvas = document.getElementById("world") as HTMLCanvasElement;
  canvas.onclick = (e) => {
    const rect = canvas.getBoundingClientRect();
    const scale = canvas.width / 14;
    const x = (e.clientX - rect.left - canvas.width / 2) / scale;
    const y = -(e.clientY - rect.top - canvas.height / 2) / scale;
    sendCommand({ cmd: "add_obstacle", x: Number(x.toFixed(2)), y: Number(y.toFixed(2)), r: 0.25 });
  };

  repaint();
}

main();
