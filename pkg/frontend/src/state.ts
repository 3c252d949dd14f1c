// Client world state: a pure fold over the server message log plus the
// operator's not-yet-acknowledged edits (drawn dashed until acked).
import type { ServerMessage, SnapshotPayload, StepEventPayload } from "./protocol.js";
import type { Point } from "./geometry.js";

export interface PendingEdit {
  commandId: string;
  kind: string;
  name?: string;
  vertices?: Point[];
}

export interface WorldView {
  seq: number;
  step: number;
  scenario: SnapshotPayload["scenario"] | null;
  executed: number[][];
  plan: number[][] | null;
  lastStep: StepEventPayload | null;
  robustnessHistory: { step: number; value: number | null }[];
  paused: boolean;
  speed: number;
  done: boolean;
  placeholders: { budget: number; used: string[] };
  warnings: string[];
  pendingEdits: PendingEdit[];
  finalStatus: string | null;
}

export function initialView(): WorldView {
  return {
    seq: 0,
    step: 0,
    scenario: null,
    executed: [],
    plan: null,
    lastStep: null,
    robustnessHistory: [],
    paused: false,
    speed: 1,
    done: false,
    placeholders: { budget: 0, used: [] },
    warnings: [],
    pendingEdits: [],
    finalStatus: null,
  };
}

const WARNING_LIMIT = 20;

/** Fold one server message into the view; pure (returns a new view). */
export function applyMessage(view: WorldView, msg: ServerMessage): WorldView {
  const next: WorldView = { ...view, seq: msg.seq, step: msg.step };
  switch (msg.kind) {
    case "snapshot": {
      const p = msg.payload;
      next.scenario = p.scenario;
      next.executed = p.executed;
      next.plan = p.plan;
      next.paused = p.paused;
      next.speed = p.speed;
      next.done = p.done;
      next.placeholders = p.placeholders;
      if (p.step <= 1) {
        next.robustnessHistory = [];
        next.lastStep = null;
        next.finalStatus = null;
      }
      break;
    }
    case "step_event": {
      const p = msg.payload;
      next.lastStep = p;
      next.plan = p.plan;
      if (p.committed_state !== null) {
        next.executed = [...view.executed, p.committed_state];
      }
      next.robustnessHistory = [
        ...view.robustnessHistory,
        { step: p.step, value: p.robustness },
      ];
      if (p.events_applied.length > 0 && next.scenario) {
        // geometry changes are reflected by the next snapshot; mark edits
        next.pendingEdits = view.pendingEdits.filter(
          (e) => !(e.name && p.events_applied.includes(e.name)),
        );
      }
      break;
    }
    case "plan_update": {
      const p = msg.payload;
      next.pendingEdits = view.pendingEdits.filter((e) => e.commandId !== p.command_id);
      if (p.kind === "pause") next.paused = true;
      if (p.kind === "resume") next.paused = false;
      if (next.scenario && p.name && p.kind === "add_obstacle") {
        next.placeholders = {
          ...view.placeholders,
          used: [...view.placeholders.used, p.name],
        };
      }
      if (next.scenario && p.name && p.kind === "remove_obstacle") {
        next.placeholders = {
          ...view.placeholders,
          used: view.placeholders.used.filter((n) => n !== p.name),
        };
      }
      break;
    }
    case "warning": {
      const p = msg.payload;
      next.warnings = [...view.warnings, p.message].slice(-WARNING_LIMIT);
      if (p.command_id) {
        next.pendingEdits = view.pendingEdits.filter((e) => e.commandId !== p.command_id);
      }
      break;
    }
    case "done": {
      next.done = true;
      next.finalStatus = msg.payload.status;
      next.executed = msg.payload.trajectory;
      break;
    }
  }
  return next;
}

export function applyLog(messages: ServerMessage[], edits: PendingEdit[] = []): WorldView {
  let view = initialView();
  view = { ...view, pendingEdits: edits };
  for (const msg of messages) {
    view = applyMessage(view, msg);
  }
  return view;
}

export function addPendingEdit(view: WorldView, edit: PendingEdit): WorldView {
  return { ...view, pendingEdits: [...view.pendingEdits, edit] };
}
