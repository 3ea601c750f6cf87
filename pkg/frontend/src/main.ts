/** Browser glue: wires a ConsoleSession to the page.
 *
 * The frame is drawn with integer nearest-neighbor upscaling only — no
 * overlays, grids, or hints are ever composited onto it.
 */

import { ConsoleViewState, ConsoleSession } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(state: ConsoleViewState): void {
  el<HTMLSpanElement>("connection").textContent = state.connection;
  el<HTMLSpanElement>("mode").textContent =
    state.mode === "lite" ? "lite (paused while you think)" : state.mode ?? "";
  el<HTMLSpanElement>("step").textContent = String(state.step);
  el<HTMLSpanElement>("game-time").textContent = `${(state.gameTimeMs / 1000).toFixed(1)}s`;
  el<HTMLSpanElement>("score").textContent =
    `${(state.progress * 100).toFixed(2)}%` +
    (state.furthestLabel ? ` (${state.furthestLabel})` : "");

  const errorBox = el<HTMLDivElement>("error");
  errorBox.textContent = state.lastError ?? "";
  errorBox.style.display = state.lastError ? "block" : "none";

  const historyBox = el<HTMLUListElement>("history");
  historyBox.replaceChildren(
    ...state.history.slice(-30).map((text) => {
      const item = document.createElement("li");
      item.textContent = text;
      return item;
    })
  );

  if (state.frame) drawFrame(state);
}

function drawFrame(state: ConsoleViewState): void {
  const frame = state.frame!;
  const canvas = el<HTMLCanvasElement>("screen");
  const image = new Image();
  image.onload = () => {
    const scale = Math.max(
      1,
      Math.floor(Math.min(960 / frame.width, 600 / frame.height))
    );
    canvas.width = frame.width * scale;
    canvas.height = frame.height * scale;
    const ctx = canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false; // nearest-neighbor
    ctx.drawImage(image, 0, 0, canvas.width, canvas.height);
  };
  image.src = `data:image/png;base64,${frame.image}`;
}

export function boot(): void {
  const params = new URLSearchParams(location.search);
  const game = params.get("game") ?? "clicking";
  const uri = params.get("gateway") ?? `ws://${location.hostname}:8765`;

  const session = new ConsoleSession({ game, onUpdate: render });
  const socket = new WebSocket(uri);
  socket.onopen = () =>
    session.handleOpen({
      send: (text) => socket.send(text),
      close: () => socket.close(),
    });
  socket.onmessage = (event) => session.handleMessage(String(event.data));
  socket.onclose = () => session.handleClose();
  socket.onerror = () => session.handleTransportError(`cannot reach ${uri}`);

  const input = el<HTMLInputElement>("command");
  el<HTMLFormElement>("command-form").addEventListener("submit", (event) => {
    event.preventDefault();
    session.submitCommand(input.value);
    input.value = "";
  });

  const toggle = el<HTMLInputElement>("shortcut-toggle");
  toggle.addEventListener("change", () => session.setShortcutMode(toggle.checked));
  document.addEventListener("keydown", (event) => {
    if (document.activeElement === input) return; // typing a command
    if (session.handleKeydown(event)) event.preventDefault();
  });
}

if (typeof document !== "undefined" && document.getElementById("screen")) {
  boot();
}
