// [SECONDARY acceptance] edit gestures emit schema-valid commands; invalid or
// paused gestures emit nothing.
import { beforeEach, describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { ClientCommand, ServerMessage } from "../src/protocol.js";
import { applyMessage, initialView, type WorldView } from "../src/state.js";
import { EditTools } from "../src/tools.js";
import type { Point } from "../src/geometry.js";

function snapshotView(name = "snapshot_corner.json"): WorldView {
  const raw = readFileSync(join(__dirname, "fixtures", name), "utf-8");
  const view = applyMessage(initialView(), ServerMessage.parse(JSON.parse(raw)));
  // fixtures are captured from a paused server; tests exercise the live state
  return { ...view, paused: false };
}

describe("edit tools", () => {
  let sent: ClientCommand[];
  let errors: string[];
  let tools: EditTools;

  beforeEach(() => {
    sent = [];
    errors = [];
    tools = new EditTools({
      send: (cmd) => sent.push(cmd),
      error: (msg) => errors.push(msg),
    });
  });

  it("rectangle draw on empty space emits a schema-valid add_obstacle", () => {
    const view = snapshotView();
    tools.pointerDown(view, [6.0, 1.2]);
    tools.pointerMove([7.0, 1.8]);
    const cmd = tools.pointerUp(view, [7.0, 1.8]);
    expect(cmd).not.toBeNull();
    const parsed = ClientCommand.parse(cmd);
    expect(parsed.kind).toBe("add_obstacle");
    if (parsed.kind === "add_obstacle") {
      expect(parsed.vertices.length).toBe(4);
    }
    expect(sent.length).toBe(1);
  });

  it("dragging an obstacle emits update_obstacle with translated vertices", () => {
    const view = snapshotView();
    tools.pointerDown(view, [2.0, 0.2]); // inside the B box
    tools.pointerMove([2.5, 0.2]);
    const cmd = tools.pointerUp(view, [2.5, 0.2]);
    expect(cmd).not.toBeNull();
    const parsed = ClientCommand.parse(cmd);
    expect(parsed.kind).toBe("update_obstacle");
    if (parsed.kind === "update_obstacle") {
      expect(parsed.name).toBe("B");
      const xs = parsed.vertices.map((v) => v[0]);
      expect(Math.min(...xs)).toBeCloseTo(1.7, 5); // 1.2 shifted by +0.5
    }
  });

  it("dragging the goal emits move_goal", () => {
    const view = snapshotView();
    tools.pointerDown(view, [6.5, 0.2]); // inside the A box
    tools.pointerMove([6.5, 0.4]);
    const cmd = tools.pointerUp(view, [6.5, 0.4]);
    const parsed = ClientCommand.parse(cmd);
    expect(parsed.kind).toBe("move_goal");
  });

  it("delete emits remove_obstacle only for used placeholders", () => {
    const view = snapshotView();
    tools.pointerDown(view, [2.0, 0.2]);
    tools.pointerUp(view, [2.0, 0.2]); // click selects without dragging
    expect(tools.selectedName).toBe("B");
    // B is a declared obstacle, not a drawn placeholder: delete refuses
    expect(tools.deleteSelected(view)).toBeNull();
    expect(errors.length).toBe(1);
    // pretend B was a drawn placeholder
    const withUsed = {
      ...view,
      placeholders: { budget: 1, used: ["B"] },
    };
    tools.pointerDown(withUsed, [2.0, 0.2]);
    tools.pointerUp(withUsed, [2.0, 0.2]);
    const cmd = tools.deleteSelected(withUsed);
    const parsed = ClientCommand.parse(cmd);
    expect(parsed.kind).toBe("remove_obstacle");
  });

  it("zero-area rectangles are rejected client-side", () => {
    const view = snapshotView();
    tools.pointerDown(view, [6.0, 1.2]);
    const cmd = tools.pointerUp(view, [6.0, 1.2]);
    expect(cmd).toBeNull();
    expect(sent.length).toBe(0);
    expect(errors.length).toBe(1);
  });

  it("geometry outside the workspace is rejected client-side", () => {
    const view = snapshotView();
    tools.pointerDown(view, [8.5, 1.0]);
    const cmd = tools.pointerUp(view, [12.0, 3.0]); // beyond x = 9
    expect(cmd).toBeNull();
    expect(sent.length).toBe(0);
    expect(errors.some((e) => e.includes("workspace"))).toBe(true);
  });

  it("no commands are emitted while paused except pause/resume/reset", () => {
    const paused = { ...snapshotView(), paused: true };
    tools.pointerDown(paused, [6.0, 1.2]);
    expect(tools.pointerUp(paused, [7.0, 1.8])).toBeNull();
    expect(tools.setSpeed(2, paused)).toBeNull();
    expect(sent.length).toBe(0);
    const resume = tools.resume();
    const pause = tools.pause();
    const reset = tools.reset();
    expect([resume.kind, pause.kind, reset.kind]).toEqual([
      "resume",
      "pause",
      "reset",
    ]);
    expect(sent.length).toBe(3);
  });

  it("set_speed validates its range", () => {
    const view = snapshotView();
    expect(tools.setSpeed(500, view)).toBeNull();
    expect(errors.length).toBe(1);
    const ok = tools.setSpeed(2.0, view);
    expect(ClientCommand.parse(ok).kind).toBe("set_speed");
  });
});
