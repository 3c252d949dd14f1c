"""Command-line interface: plan, rhc, monitor, plot.

Exit codes are frozen for scripting: 0 success, 1 I/O or validation error,
2 infeasibility proven, 3 budget/stall/iteration cap.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import milp, mtl, robustness
from .encoding import encode
from .scenario import Scenario, load_scenario, load_events
from .synthesis import (
    RecedingHorizonRunner,
    StallError,
    SynthesisResult,
    synthesize_open_loop,
    step_event_dict,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(
    path: Path, states: np.ndarray, inputs: Optional[np.ndarray], scn: Scenario
) -> None:
    labels = list(scn.dynamics.state_labels)
    input_labels = list(scn.dynamics.input_labels)
    lines = ["k,t," + ",".join(labels) + "," + ",".join(input_labels)]
    for k, row in enumerate(states):
        cells = [str(k), _fmt_float(k * scn.dt)]
        cells += [_fmt_float(v) for v in row]
        if inputs is not None and k < len(inputs):
            cells += [_fmt_float(v) for v in inputs[k]]
        else:
            cells += [""] * len(input_labels)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_unicycle_trace_csv(
    path: Path, res: SynthesisResult, scn: Scenario, wheel_distance: float = 0.05
) -> None:
    """Continuous unicycle execution of a planar plan under the linearizing law."""
    from .dynamics import SingularityError, UnicycleState, simulate_unicycle

    x0 = res.states[0]
    initial = UnicycleState(
        x0[0], x0[1], math.atan2(x0[3], x0[2]), float(np.hypot(x0[2], x0[3]))
    )
    try:
        trace = simulate_unicycle(initial, res.inputs, dt=scn.dt, substeps=20)
    except SingularityError as e:
        print(f"unicycle trace skipped: {e}", file=sys.stderr)
        return
    vr, vl = trace.wheel_speed_series(wheel_distance)
    lines = ["t,x,y,theta,v,omega,vr,vl"]
    for i in range(len(trace.t)):
        lines.append(
            ",".join(
                _fmt_float(v)
                for v in (
                    trace.t[i], trace.x[i], trace.y[i], trace.theta[i],
                    trace.v[i], trace.omega[i], vr[i], vl[i],
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: Path, n_states: int) -> np.ndarray:
    lines = path.read_text().strip().splitlines()
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append([float(c) for c in cells[2 : 2 + n_states]])
    return np.asarray(rows)


def write_inputs_csv(path: Path, inputs: np.ndarray, scn: Scenario) -> None:
    labels = list(scn.dynamics.input_labels)
    lines = ["k,t," + ",".join(labels)]
    for k, row in enumerate(inputs):
        lines.append(
            ",".join([str(k), _fmt_float(k * scn.dt)] + [_fmt_float(v) for v in row])
        )
    path.write_text("\n".join(lines) + "\n")


def _witness_dict(w: Optional[robustness.RobustnessWitness], scn: Scenario, enc) -> Optional[dict]:
    if w is None:
        return None
    occ = enc.occurrences[w.critical_occurrence]
    return {
        "value": w.value,
        "critical_index": w.critical_index,
        "critical_time": w.critical_index * scn.dt,
        "critical_occurrence": w.critical_occurrence,
        "critical_predicate": occ.name,
        "polarity": occ.polarity,
    }


def snapshot_dict(scn: Scenario, enc) -> dict:
    return enc.snapshot_dict()


def _result_json(res: SynthesisResult, scn: Scenario, enc) -> dict:
    return {
        "status": res.status,
        "objective": res.objective,
        "iterations": res.iterations,
        "activations": [list(a) for a in res.activations],
        "robustness_resized": _witness_dict(res.witness_resized, scn, enc),
        "robustness_original": _witness_dict(res.witness_original, scn, enc),
    }


def _status_exit_code(status: str) -> int:
    if status == "feasible":
        return EXIT_OK
    if status == "infeasible-proven":
        return EXIT_INFEASIBLE
    return EXIT_BUDGET


def cmd_plan(args: argparse.Namespace) -> int:
    try:
        scn = load_scenario(args.scenario)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(args.output or f"artifacts/{scn.name}")
    outdir.mkdir(parents=True, exist_ok=True)
    enc = encode(scn)
    if args.full_encoding:
        enc.activate_full_encoding()
        sol = milp.solve_milp(enc.model, budget=args.deadline)
        if sol.status == "infeasible":
            print("status: infeasible-proven (full encoding)")
            return EXIT_INFEASIBLE
        if sol.values is None:
            print(f"status: {sol.status}")
            return EXIT_BUDGET
        states = enc.extract_states(sol)
        res = SynthesisResult(
            status="feasible",
            states=states,
            inputs=enc.extract_inputs(sol),
            objective=sol.objective,
            iterations=0,
            activations=sorted(enc.active),
        )
        traj = robustness.Trajectory(states, scn.dt)
        res.witness_resized = robustness.evaluate(enc.formula, traj, enc.resized_geoms())
        res.witness_original = robustness.evaluate(enc.formula, traj, enc.original_geoms())
    else:
        try:
            res = synthesize_open_loop(
                enc, max_iterations=args.max_iterations, deadline=args.deadline
            )
        except StallError as e:
            print(f"stall: {e}", file=sys.stderr)
            return EXIT_BUDGET

    print(f"status: {res.status}")
    if res.objective is not None:
        print(f"objective: {res.objective:.9g}")
    print(f"iterations: {res.iterations}")
    if res.witness_resized is not None:
        print(f"robustness (resized sets): {res.witness_resized.value:.9g}")
    if res.witness_original is not None:
        print(f"robustness (original sets): {res.witness_original.value:.9g}")

    if res.states is not None:
        write_trajectory_csv(outdir / "trajectory.csv", res.states, res.inputs, scn)
        write_inputs_csv(outdir / "inputs.csv", res.inputs, scn)
        if scn.dynamics.state_labels == ("x", "y", "vx", "vy"):
            write_unicycle_trace_csv(outdir / "unicycle_trace.csv", res, scn)
    (outdir / "witness.json").write_text(
        json.dumps(_result_json(res, scn, enc), indent=2, sort_keys=True) + "\n"
    )
    (outdir / "activations.json").write_text(
        json.dumps([list(a) for a in res.activations]) + "\n"
    )
    (outdir / "scenario_snapshot.json").write_text(
        json.dumps(snapshot_dict(scn, enc), indent=2, sort_keys=True) + "\n"
    )
    return _status_exit_code(res.status)


def cmd_rhc(args: argparse.Namespace) -> int:
    try:
        scn = load_scenario(args.scenario)
        events = (
            load_events(args.events, scn.dynamics.n) if args.events else None
        )
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(args.output or f"artifacts/{scn.name}-rhc")
    outdir.mkdir(parents=True, exist_ok=True)

    if args.serve:
        from .reactive_server import serve

        host, _, port = args.serve.partition(":")
        serve(scn, host=host or "127.0.0.1", port=int(port or 8000), events=events)
        return EXIT_OK

    step_deadline = args.step_deadline
    if args.deterministic:
        step_deadline = math.inf
    runner = RecedingHorizonRunner(
        scn,
        step_deadline=step_deadline,
        max_solves_per_step=args.max_solves,
        events=events,
    )
    with (outdir / "steps.jsonl").open("w") as fh:
        while not runner.done:
            rec = runner.step()
            fh.write(json.dumps(step_event_dict(rec), sort_keys=True) + "\n")
            for w in rec.warnings:
                print(f"step {rec.step}: warning: {w}", file=sys.stderr)
    res = runner.result()
    print(f"status: {res.status}")
    print(f"objective: {res.objective:.9g}")
    print(f"robustness (resized sets): {res.witness_resized.value:.9g}")
    print(f"robustness (original sets): {res.witness_original.value:.9g}")
    infeasible_steps = [r.step for r in runner.history if r.status != "feasible"]
    print(f"non-feasible steps: {infeasible_steps}")

    write_trajectory_csv(outdir / "trajectory.csv", res.states, res.inputs, scn)
    (outdir / "witness.json").write_text(
        json.dumps(_result_json(res, scn, runner.enc), indent=2, sort_keys=True) + "\n"
    )
    (outdir / "scenario_snapshot.json").write_text(
        json.dumps(snapshot_dict(scn, runner.enc), indent=2, sort_keys=True) + "\n"
    )
    return _status_exit_code(res.status)


def cmd_monitor(args: argparse.Namespace) -> int:
    try:
        scn = load_scenario(args.scenario)
        formula = mtl.parse(args.formula) if args.formula else scn.formula
        nnf = mtl.to_nnf(formula)
        states = read_trajectory_csv(Path(args.trajectory), scn.dynamics.n)
        traj = robustness.Trajectory(states, scn.dt)
        occs = mtl.classify_occurrences(nnf)
        geoms = {}
        for occ in occs:
            base = scn.predicates[occ.name]
            delta = -args.resize if occ.polarity == "safe" else args.resize
            geoms[occ.occurrence_id] = base.with_offset(delta)
        witness = robustness.evaluate(nnf, traj, geoms, at=args.at)
    except robustness.HorizonMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    occ = occs[witness.critical_occurrence]
    if args.json:
        print(
            json.dumps(
                {
                    "value": witness.value,
                    "critical_index": witness.critical_index,
                    "critical_time": witness.critical_index * scn.dt,
                    "critical_occurrence": witness.critical_occurrence,
                    "critical_predicate": occ.name,
                    "polarity": occ.polarity,
                },
                sort_keys=True,
            )
        )
    else:
        print(f"robustness: {witness.value:.9g}")
        print(
            f"critical time: {witness.critical_index * scn.dt:.9g} s "
            f"(index {witness.critical_index})"
        )
        print(f"critical predicate: {occ.name} ({occ.polarity})")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    artifacts = Path(args.artifacts)
    snap_path = artifacts / "scenario_snapshot.json"
    traj_path = artifacts / "trajectory.csv"
    if not snap_path.exists() or not traj_path.exists():
        print(f"error: missing artifacts in {artifacts}", file=sys.stderr)
        return EXIT_ERROR
    from . import plotting

    snap = json.loads(snap_path.read_text())
    states = read_trajectory_csv(traj_path, len(snap["workspace"]["lower"]))
    out = Path(args.output or artifacts / "figure.svg")
    witness = None
    witness_path = artifacts / "witness.json"
    if witness_path.exists():
        witness = json.loads(witness_path.read_text())
    plotting.plot_scene(snap, states, witness, out)
    print(f"wrote {out}")
    steps_path = artifacts / "steps.jsonl"
    if steps_path.exists() and not args.no_frames:
        frames = plotting.plot_step_frames(snap, steps_path, artifacts)
        print(f"wrote {frames} step frames")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlplan",
        description="Minimum-effort trajectory synthesis for MTL specifications",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="open-loop lazy synthesis")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="artifact directory")
    p.add_argument("--full-encoding", action="store_true", help="activate every window row group up front")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--deadline", type=float, default=None, help="wall-clock budget in seconds")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("rhc", help="receding-horizon reactive synthesis")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", help="artifact directory")
    p.add_argument("--events", help="scripted predicate-update JSON file")
    p.add_argument("--step-deadline", type=float, default=None)
    p.add_argument("--max-solves", type=int, default=None, help="MILP solves per step")
    p.add_argument(
        "--deterministic",
        action="store_true",
        help="disable the wall clock; budget steps by solve count only",
    )
    p.add_argument("--serve", metavar="HOST:PORT", help="hand the loop to the reactive server")
    p.set_defaults(func=cmd_rhc)

    p = sub.add_parser("monitor", help="robustness of a recorded trajectory")
    p.add_argument("trajectory", help="trajectory CSV")
    p.add_argument("scenario", help="scenario file providing predicates")
    p.add_argument("--formula", help="override the scenario formula")
    p.add_argument("--resize", type=float, default=0.0, help="monitor sets resized by this margin")
    p.add_argument("--at", type=int, default=0, help="evaluation start index")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("plot", help="render plan/rhc artifacts to SVG")
    p.add_argument("artifacts", help="artifact directory from plan or rhc")
    p.add_argument("-o", "--output", help="output SVG path")
    p.add_argument("--no-frames", action="store_true", help="skip per-step frames")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
