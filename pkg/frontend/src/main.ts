// DOM bootstrap: one canvas, a toolbar, pointer plumbing into EditTools.
import { ConsoleClient } from "./client.js";
import { makeViewport, render, type Canvas2DLike } from "./render.js";
import { EditTools } from "./tools.js";
import { addPendingEdit } from "./state.js";
import type { Point } from "./geometry.js";

function must<T>(value: T | null, what: string): T {
  if (value === null) throw new Error(`missing ${what}`);
  return value;
}

const canvas = must(
  document.querySelector<HTMLCanvasElement>("#world"),
  "#world canvas",
);
const ctx = must(canvas.getContext("2d"), "2d context") as unknown as Canvas2DLike;
const statusEl = must(document.querySelector<HTMLElement>("#messages"), "#messages");

const client = new ConsoleClient();
const tools = new EditTools({
  send: (cmd) => {
    client.send(cmd);
    if ("vertices" in cmd && cmd.vertices) {
      client.setView(
        addPendingEdit(client.view, {
          commandId: cmd.id,
          kind: cmd.kind,
          name: "name" in cmd ? cmd.name : undefined,
          vertices: cmd.vertices as Point[],
        }),
      );
    }
  },
  error: (message) => {
    statusEl.textContent = message;
    setTimeout(() => {
      if (statusEl.textContent === message) statusEl.textContent = "";
    }, 4000);
  },
});

let frameRequested = false;
client.onChange(() => {
  if (!frameRequested) {
    frameRequested = true;
    requestAnimationFrame(() => {
      frameRequested = false;
      render(client.view, ctx);
    });
  }
});

function toWorld(event: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  const px: Point = [event.clientX - rect.left, event.clientY - rect.top];
  const vp = makeViewport(client.view, canvas.width, canvas.height);
  // invert the viewport mapping
  const origin = vp.toPx([0, 0]);
  return [(px[0] - origin[0]) / vp.scale, (origin[1] - px[1]) / vp.scale];
}

canvas.addEventListener("pointerdown", (e) => {
  tools.pointerDown(client.view, toWorld(e));
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  tools.pointerMove(toWorld(e));
  const pending = tools.pendingGeometry;
  if (pending) {
    render(client.view, ctx);
  }
});
canvas.addEventListener("pointerup", (e) => {
  tools.pointerUp(client.view, toWorld(e));
});
window.addEventListener("keydown", (e) => {
  if (e.key === "Delete" || e.key === "Backspace") {
    tools.deleteSelected(client.view);
  }
});

must(document.querySelector<HTMLButtonElement>("#pause"), "#pause").onclick = () =>
  tools.pause();
must(document.querySelector<HTMLButtonElement>("#resume"), "#resume").onclick = () =>
  tools.resume();
must(document.querySelector<HTMLButtonElement>("#reset"), "#reset").onclick = () =>
  tools.reset();
const speedInput = must(
  document.querySelector<HTMLInputElement>("#speed"),
  "#speed",
);
speedInput.onchange = () => tools.setSpeed(Number(speedInput.value), client.view);

const host = window.location.host || "127.0.0.1:8000";
client.connect(`ws://${host}/ws`);
render(client.view, ctx);
