// Edit tools: pointer gestures become validated client commands.
//
//   rectangle drag on empty space  -> add_obstacle
//   drag inside an obstacle        -> update_obstacle (translate)
//   drag inside the goal           -> move_goal (translate)
//   click obstacle, press Delete   -> remove_obstacle (placeholders only)
//
// Geometry is validated client-side (convex, non-degenerate, inside the
// workspace) before anything is sent; invalid gestures report an error and
// emit nothing. While paused, only pause/resume/reset are emitted; other
// gestures report an error instead of sending.
import type { ClientCommand } from "./protocol.js";
import { ClientCommand as ClientCommandSchema } from "./protocol.js";
import type { WorldView } from "./state.js";
import {
  convexHull,
  pointInPolygon,
  polygonArea,
  polygonFromHalfspaces,
  rectangleVertices,
  translatePolygon,
  type Point,
} from "./geometry.js";

export interface ToolCallbacks {
  send(cmd: ClientCommand): void;
  error(message: string): void;
}

type DragState =
  | { mode: "idle" }
  | { mode: "draw"; start: Point; current: Point }
  | { mode: "move"; name: string; kind: "update_obstacle" | "move_goal"; start: Point; base: Point[]; current: Point };

const MIN_AREA = 1e-3;

export class EditTools {
  private drag: DragState = { mode: "idle" };
  private selected: string | null = null;
  private nextId = 0;

  constructor(private callbacks: ToolCallbacks) {}

  private commandId(): string {
    this.nextId += 1;
    return `ui${this.nextId}`;
  }

  get selectedName(): string | null {
    return this.selected;
  }

  get pendingGeometry(): Point[] | null {
    if (this.drag.mode === "draw") {
      return rectangleVertices(this.drag.start, this.drag.current);
    }
    if (this.drag.mode === "move") {
      const [dx, dy] = [
        this.drag.current[0] - this.drag.start[0],
        this.drag.current[1] - this.drag.start[1],
      ];
      return translatePolygon(this.drag.base, dx, dy);
    }
    return null;
  }

  /** Named polygons (position plane) hit-testable under the pointer. */
  private hitTest(view: WorldView, p: Point): { name: string; polarity: string; poly: Point[] } | null {
    if (!view.scenario) return null;
    for (const occ of view.scenario.occurrences) {
      const pred = view.scenario.predicates[occ.name];
      if (!pred) continue;
      const poly = polygonFromHalfspaces(pred.A, pred.b);
      if (poly.length >= 3 && pointInPolygon(p, poly)) {
        return { name: occ.name, polarity: occ.polarity, poly };
      }
    }
    return null;
  }

  pointerDown(view: WorldView, p: Point): void {
    const hit = this.hitTest(view, p);
    if (hit) {
      this.selected = hit.name;
      this.drag = {
        mode: "move",
        name: hit.name,
        kind: hit.polarity === "safe" ? "move_goal" : "update_obstacle",
        start: p,
        base: hit.poly,
        current: p,
      };
    } else {
      this.selected = null;
      this.drag = { mode: "draw", start: p, current: p };
    }
  }

  pointerMove(p: Point): void {
    if (this.drag.mode !== "idle") {
      this.drag = { ...this.drag, current: p };
    }
  }

  pointerUp(view: WorldView, p: Point): ClientCommand | null {
    const drag = this.drag;
    this.drag = { mode: "idle" };
    if (drag.mode === "idle") return null;
    if (view.paused) {
      this.callbacks.error("paused: resume before editing the world");
      return null;
    }
    if (drag.mode === "draw") {
      const verts = rectangleVertices(drag.start, p);
      if (!this.validate(view, verts)) return null;
      return this.emit({
        id: this.commandId(),
        kind: "add_obstacle",
        vertices: verts,
      });
    }
    const [dx, dy] = [p[0] - drag.start[0], p[1] - drag.start[1]];
    if (Math.abs(dx) < 1e-9 && Math.abs(dy) < 1e-9) return null; // click, not drag
    const verts = translatePolygon(drag.base, dx, dy).map(
      ([x, y]) => [x, y] as Point,
    );
    if (!this.validate(view, verts)) return null;
    if (drag.kind === "move_goal") {
      return this.emit({
        id: this.commandId(),
        kind: "move_goal",
        name: drag.name,
        vertices: verts,
      });
    }
    return this.emit({
      id: this.commandId(),
      kind: "update_obstacle",
      name: drag.name,
      vertices: verts,
    });
  }

  deleteSelected(view: WorldView): ClientCommand | null {
    if (this.selected === null) return null;
    if (view.paused) {
      this.callbacks.error("paused: resume before editing the world");
      return null;
    }
    if (!view.placeholders.used.includes(this.selected)) {
      this.callbacks.error(`${this.selected} is not a removable obstacle`);
      return null;
    }
    const cmd: ClientCommand = {
      id: this.commandId(),
      kind: "remove_obstacle",
      name: this.selected,
    };
    this.selected = null;
    return this.emit(cmd);
  }

  pause(): ClientCommand {
    return this.emit({ id: this.commandId(), kind: "pause" });
  }

  resume(): ClientCommand {
    return this.emit({ id: this.commandId(), kind: "resume" });
  }

  reset(): ClientCommand {
    return this.emit({ id: this.commandId(), kind: "reset" });
  }

  setSpeed(speed: number, view?: WorldView): ClientCommand | null {
    if (view?.paused) {
      this.callbacks.error("paused: resume before changing speed");
      return null;
    }
    if (!(speed >= 0.01 && speed <= 100)) {
      this.callbacks.error(`speed ${speed} outside [0.01, 100]`);
      return null;
    }
    return this.emit({ id: this.commandId(), kind: "set_speed", speed });
  }

  private validate(view: WorldView, vertices: Point[]): boolean {
    const hull = convexHull(vertices);
    if (hull.length < 3 || polygonArea(hull) < MIN_AREA) {
      this.callbacks.error("geometry is degenerate (zero area)");
      return false;
    }
    const ws = view.scenario?.workspace;
    if (ws) {
      for (const [x, y] of hull) {
        if (x < ws.lower[0] || x > ws.upper[0] || y < ws.lower[1] || y > ws.upper[1]) {
          this.callbacks.error("geometry extends outside the workspace");
          return false;
        }
      }
    }
    return true;
  }

  private emit(cmd: ClientCommand): ClientCommand {
    // schema-check everything we send; the server re-validates anyway
    ClientCommandSchema.parse(cmd);
    this.callbacks.send(cmd);
    return cmd;
  }
}
