// Wire types for the reactive planning server (see docs/protocol.md, v1).
import { z } from "zod";

export const PROTOCOL_VERSION = 1;

const matrix = z.array(z.array(z.number()));
const vector = z.array(z.number());

export const PredicateGeometry = z.object({
  A: matrix,
  b: vector,
});

export const Occurrence = z.object({
  id: z.number().int(),
  name: z.string(),
  polarity: z.enum(["safe", "unsafe"]),
  resized_b: vector,
});

export const ScenarioData = z.object({
  name: z.string(),
  formula: z.string(),
  rho_d: z.number(),
  dt: z.number(),
  n: z.number().int(),
  workspace: z.object({ lower: vector, upper: vector }),
  initial: vector,
  inputs: z.object({ lower: vector, upper: vector, weights: vector }),
  predicates: z.record(z.string(), PredicateGeometry),
  occurrences: z.array(Occurrence),
});

export const SnapshotPayload = z.object({
  scenario: ScenarioData,
  executed: matrix,
  plan: matrix.nullable(),
  formula: z.string(),
  step: z.number().int(),
  paused: z.boolean(),
  speed: z.number(),
  done: z.boolean(),
  placeholders: z.object({ budget: z.number().int(), used: z.array(z.string()) }),
});

export const StepEventPayload = z.object({
  step: z.number().int(),
  t: z.number(),
  status: z.enum(["feasible", "infeasible-incumbent", "held"]),
  robustness: z.number().nullable(),
  robustness_original: z.number().nullable(),
  critical_index: z.number().int().nullable(),
  critical_occurrence: z.number().int().nullable(),
  activations: z.array(z.array(z.number())),
  plan: matrix.nullable(),
  committed_state: vector.nullable(),
  committed_input: vector.nullable(),
  solves: z.number().int(),
  solve_ms: z.number(),
  warnings: z.array(z.string()),
  events_applied: z.array(z.string()),
});

export const PlanUpdatePayload = z.object({
  command_id: z.string(),
  kind: z.string(),
  phase: z.string(),
  name: z.string().optional(),
  apply_at_step: z.number().int().optional(),
});

export const WarningPayload = z.object({
  message: z.string(),
  command_id: z.string().optional(),
  rejected: z.boolean().optional(),
});

export const DonePayload = z.object({
  status: z.string(),
  objective: z.number().nullable(),
  robustness: z.number(),
  robustness_original: z.number(),
  trajectory: matrix,
  inputs: matrix,
  command_log: z.array(
    z.object({ step: z.number().int(), name: z.string(), A: matrix, b: vector }),
  ),
});

export const ServerMessage = z.discriminatedUnion("kind", [
  z.object({
    v: z.literal(1),
    seq: z.number().int(),
    step: z.number().int(),
    kind: z.literal("snapshot"),
    payload: SnapshotPayload,
  }),
  z.object({
    v: z.literal(1),
    seq: z.number().int(),
    step: z.number().int(),
    kind: z.literal("step_event"),
    payload: StepEventPayload,
  }),
  z.object({
    v: z.literal(1),
    seq: z.number().int(),
    step: z.number().int(),
    kind: z.literal("plan_update"),
    payload: PlanUpdatePayload,
  }),
  z.object({
    v: z.literal(1),
    seq: z.number().int(),
    step: z.number().int(),
    kind: z.literal("warning"),
    payload: WarningPayload,
  }),
  z.object({
    v: z.literal(1),
    seq: z.number().int(),
    step: z.number().int(),
    kind: z.literal("done"),
    payload: DonePayload,
  }),
]);

export type ServerMessage = z.infer<typeof ServerMessage>;
export type SnapshotPayload = z.infer<typeof SnapshotPayload>;
export type StepEventPayload = z.infer<typeof StepEventPayload>;
export type ScenarioData = z.infer<typeof ScenarioData>;

const vertexList = z
  .array(z.tuple([z.number(), z.number()]))
  .min(3, "need at least 3 vertices");

export const ClientCommand = z.discriminatedUnion("kind", [
  z.object({ id: z.string(), kind: z.literal("add_obstacle"), vertices: vertexList }),
  z.object({
    id: z.string(),
    kind: z.literal("update_obstacle"),
    name: z.string(),
    vertices: vertexList,
  }),
  z.object({ id: z.string(), kind: z.literal("remove_obstacle"), name: z.string() }),
  z.object({
    id: z.string(),
    kind: z.literal("move_goal"),
    name: z.string().optional(),
    vertices: vertexList,
  }),
  z.object({ id: z.string(), kind: z.literal("pause") }),
  z.object({ id: z.string(), kind: z.literal("resume") }),
  z.object({ id: z.string(), kind: z.literal("set_speed"), speed: z.number() }),
  z.object({ id: z.string(), kind: z.literal("reset") }),
]);

export type ClientCommand = z.infer<typeof ClientCommand>;
