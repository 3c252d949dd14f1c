"""Lazy open-loop synthesis and the receding-horizon reactive loop.

Open loop: solve the MILP with every predicate row group switched off, monitor
the resulting trajectory, activate the single (occurrence, time index) group
named by the critical witness, re-solve, repeat until robustness is
non-negative on the resized sets.

Receding horizon: at each step the executed prefix is pinned by variable
bounds, pending geometry updates are applied, and the same lazy loop runs on
the remaining horizon under a per-step budget, committing the next planned
state even when the incumbent plan is not yet feasible.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import milp, mtl, robustness
from .encoding import EncodedScenario, encode
from .scenario import PredicateEvent, Scenario

__all__ = [
    "SynthesisResult",
    "RHCState",
    "RHCStep",
    "StallError",
    "SynthesisError",
    "synthesize_open_loop",
    "synthesize_rhc",
    "RecedingHorizonRunner",
    "step_event_dict",
]

_IMPROVE_TOL = 1e-9


class SynthesisError(RuntimeError):
    pass


class StallError(SynthesisError):
    """The critical pair is already active and robustness stopped improving."""


@dataclass
class SynthesisResult:
    status: str  # feasible | infeasible-proven | no-trajectory-fragment-incomplete
    #            | budget-exhausted | iteration-capped
    states: Optional[np.ndarray] = None
    inputs: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0
    activations: list[tuple[int, int]] = field(default_factory=list)
    witness_resized: Optional[robustness.RobustnessWitness] = None
    witness_original: Optional[robustness.RobustnessWitness] = None
    milp_nodes: int = 0
    simplex_iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _monitor(
    enc: EncodedScenario, states: np.ndarray, resized: bool
) -> robustness.RobustnessWitness:
    traj = robustness.Trajectory(states, enc.scenario.dt)
    geoms = enc.resized_geoms() if resized else enc.original_geoms()
    return robustness.evaluate(enc.formula, traj, geoms, at=0)


def synthesize_open_loop(
    enc: EncodedScenario,
    max_iterations: Optional[int] = None,
    deadline: Optional[float] = None,
) -> SynthesisResult:
    """Lazy constraint generation until the monitored robustness is >= 0.

    The iteration cap defaults to N * (number of predicate occurrences).
    Infeasibility of the MILP proves infeasibility of the original problem
    only on the conjunction/Globally fragment; elsewhere the result carries a
    fragment-incomplete status instead.
    """
    cap = max_iterations if max_iterations is not None else enc.N * len(enc.occurrences)
    deadline_at = None if deadline is None else time.monotonic() + deadline
    result = SynthesisResult(status="budget-exhausted")
    prev_value: Optional[float] = None

    while True:
        budget = None
        if deadline_at is not None:
            budget = deadline_at - time.monotonic()
            if budget <= 0:
                result.status = "budget-exhausted"
                return result
        sol = milp.solve_milp(enc.model, budget)
        result.milp_nodes += sol.nodes_explored
        result.simplex_iterations += sol.simplex_iterations
        if sol.status == "infeasible":
            if mtl.is_globally_conjunction_fragment(enc.formula):
                result.status = "infeasible-proven"
            else:
                result.status = "no-trajectory-fragment-incomplete"
            return result
        if sol.status == "unbounded":
            raise SynthesisError("MILP unbounded: workspace box should prevent this")
        if sol.values is None:
            result.status = "budget-exhausted"
            return result

        states = enc.extract_states(sol)
        result.states = states
        result.inputs = enc.extract_inputs(sol)
        result.objective = sol.objective
        witness = _monitor(enc, states, resized=True)
        result.witness_resized = witness
        if witness.value >= 0.0:
            result.status = "feasible"
            result.witness_original = _monitor(enc, states, resized=False)
            return result
        if sol.status == "budget-exceeded":
            result.status = "budget-exhausted"
            return result

        key = (witness.critical_occurrence, witness.critical_index)
        if enc.is_active(*key):
            if prev_value is not None and witness.value <= prev_value + _IMPROVE_TOL:
                raise StallError(
                    f"critical pair {key} already active and robustness "
                    f"{witness.value:.3g} did not improve"
                )
            prev_value = witness.value
            continue
        if result.iterations >= cap:
            result.status = "iteration-capped"
            return result
        enc.activate(*key)
        result.activations.append(key)
        result.iterations += 1
        prev_value = witness.value


# ---------------------------------------------------------------------------
# Receding horizon
# ---------------------------------------------------------------------------


@dataclass
class RHCState:
    """Executed prefix and loop position of a receding-horizon run."""

    step: int  # next step index i in 1..N+1
    prefix_states: np.ndarray  # (i, n) committed states x_0..x_{i-1}
    prefix_inputs: np.ndarray  # (i-1, m) committed inputs
    step_deadline: Optional[float]


@dataclass
class RHCStep:
    """Per-step record emitted by the receding-horizon loop."""

    step: int
    time: float  # plan start time (i-1) * dt
    status: str  # feasible | infeasible-incumbent | held
    robustness: Optional[float]
    robustness_original: Optional[float]
    critical_index: Optional[int]
    critical_occurrence: Optional[int]
    activations: list[tuple[int, int]]
    plan_states: Optional[np.ndarray]
    committed_state: Optional[np.ndarray]
    committed_input: Optional[np.ndarray]
    solves: int
    solve_ms: float
    warnings: list[str]
    events_applied: list[str]


UpdateFeed = Union[
    Sequence[PredicateEvent], Callable[[int, float], Iterable[PredicateEvent]], None
]


class RecedingHorizonRunner:
    """Drives the receding-horizon loop; geometry updates apply at step boundaries only.

    The per-step budget has two forms: a wall-clock deadline in seconds and a
    deterministic cap on MILP solves per step. The solve cap is what makes CI
    runs and replays reproducible; the wall clock matters for live runs.
    """

    def __init__(
        self,
        scn: Scenario,
        step_deadline: Optional[float] = None,
        max_solves_per_step: Optional[int] = None,
        events: UpdateFeed = None,
    ):
        self.scenario = scn
        self.enc = encode(scn)
        self.N = self.enc.N
        self.i = 1
        # None falls back to the scenario's deadline; math.inf disables the
        # wall clock entirely (the deterministic mode used by tests/replays)
        self.step_deadline = (
            step_deadline if step_deadline is not None else scn.rhc_step_deadline
        )
        if self.step_deadline is not None and not np.isfinite(self.step_deadline):
            self.step_deadline = None
        self.max_solves = (
            max_solves_per_step
            if max_solves_per_step is not None
            else scn.rhc_max_solves_per_step
        )
        self._scripted = list(events) if events is not None and not callable(events) else []
        self._feed = events if callable(events) else None
        self._queued: list[PredicateEvent] = []
        self.executed_states: list[np.ndarray] = [self.scenario.x0.copy()]
        self.executed_inputs: list[np.ndarray] = []
        self._plan_states: Optional[np.ndarray] = None
        self._plan_inputs: Optional[np.ndarray] = None
        self.history: list[RHCStep] = []
        # the initial plan is a full open-loop run before execution starts;
        # the per-step budget applies only to in-loop replanning
        self.initial_result = synthesize_open_loop(self.enc)
        if self.initial_result.states is not None:
            self._plan_states = self.initial_result.states.copy()
            self._plan_inputs = self.initial_result.inputs.copy()

    # -- external command surface (used by the reactive server) ----------------

    def queue_update(self, event: PredicateEvent) -> None:
        """Queue a geometry change; it is applied at the next step boundary."""
        self._queued.append(event)

    @property
    def done(self) -> bool:
        return self.i > self.N + 1

    @property
    def state(self) -> RHCState:
        return RHCState(
            step=self.i,
            prefix_states=np.array(self.executed_states),
            prefix_inputs=(
                np.array(self.executed_inputs)
                if self.executed_inputs
                else np.zeros((0, self.scenario.dynamics.m))
            ),
            step_deadline=self.step_deadline,
        )

    def combined_states(self) -> np.ndarray:
        """Executed prefix extended by the incumbent plan's suffix."""
        executed = np.array(self.executed_states)
        if self._plan_states is None:
            pad = np.repeat(executed[-1][None, :], self.N + 1 - len(executed), axis=0)
            return np.vstack([executed, pad]) if len(executed) <= self.N else executed
        merged = self._plan_states.copy()
        merged[: len(executed)] = executed
        return merged

    # -- step boundary -----------------------------------------------------------

    def _pending_events(self) -> list[PredicateEvent]:
        out = list(self._queued)
        self._queued.clear()
        dt = self.scenario.dt
        for ev in self._scripted:
            if ev.applies_at(self.i, dt):
                out.append(ev)
        if self._feed is not None:
            out.extend(self._feed(self.i, (self.i - 1) * dt))
        return out

    def step(self) -> RHCStep:
        if self.done:
            raise SynthesisError("receding-horizon run already complete")
        i = self.i
        dt = self.scenario.dt
        warnings: list[str] = []
        applied: list[str] = []
        for ev in self._pending_events():
            self.enc.update_predicate(ev.name, ev.A, ev.b)
            applied.append(ev.name)

        start = time.perf_counter()
        if i == self.N + 1:
            # zero-length remaining horizon: bookkeeping only
            record = self._final_record(i, applied, start)
            self.history.append(record)
            self.i += 1
            return record

        # pin executed prefix: states x_0..x_{i-1}, inputs u_0..u_{i-2}
        for k, xk in enumerate(self.executed_states):
            self.enc.pin_state(k, xk)
        for k, uk in enumerate(self.executed_inputs):
            self.enc.pin_input(k, uk)

        deadline_at = (
            None if self.step_deadline is None else time.monotonic() + self.step_deadline
        )
        solves = 0
        new_acts: list[tuple[int, int]] = []
        witness: Optional[robustness.RobustnessWitness] = None
        status = "held"
        while True:
            if self.max_solves is not None and solves >= self.max_solves:
                break
            budget = None
            if deadline_at is not None:
                budget = deadline_at - time.monotonic()
                if budget <= 0:
                    if solves == 0:
                        warnings.append("step deadline left no time for a solve")
                    break
            sol = milp.solve_milp(self.enc.model, budget)
            solves += 1
            if sol.status == "infeasible":
                status = "infeasible-incumbent"
                warnings.append("remaining-horizon MILP infeasible")
                break
            if sol.values is None:
                warnings.append("MILP budget exhausted without incumbent")
                break
            self._plan_states = self.enc.extract_states(sol)
            self._plan_inputs = self.enc.extract_inputs(sol)
            witness = _monitor(self.enc, self.combined_states(), resized=True)
            if witness.value >= 0.0:
                status = "feasible"
                break
            status = "infeasible-incumbent"
            key = (witness.critical_occurrence, witness.critical_index)
            if self.enc.is_active(*key):
                warnings.append(f"critical pair {key} already active; holding incumbent")
                break
            self.enc.activate(*key)
            new_acts.append(key)

        # commit the next state from the incumbent plan, feasible or not
        if self._plan_states is not None:
            committed_state = self._plan_states[i].copy()
            committed_input = self._plan_inputs[i - 1].copy()
        else:
            prev_u = (
                self.executed_inputs[-1]
                if self.executed_inputs
                else np.zeros(self.scenario.dynamics.m)
            )
            committed_input = prev_u.copy()
            committed_state = self.scenario.dynamics.step(
                self.executed_states[-1], committed_input
            )
            warnings.append("no incumbent plan; holding previous input")
            status = "held"
        self.executed_states.append(committed_state)
        self.executed_inputs.append(committed_input)

        combined = self.combined_states()
        witness = _monitor(self.enc, combined, resized=True)
        orig_val = _monitor(self.enc, combined, resized=False).value
        witness_val = witness.value
        crit_k, crit_occ = witness.critical_index, witness.critical_occurrence

        record = RHCStep(
            step=i,
            time=(i - 1) * dt,
            status=status,
            robustness=witness_val,
            robustness_original=orig_val,
            critical_index=crit_k,
            critical_occurrence=crit_occ,
            activations=new_acts,
            plan_states=combined,
            committed_state=committed_state,
            committed_input=committed_input,
            solves=solves,
            solve_ms=(time.perf_counter() - start) * 1e3,
            warnings=warnings,
            events_applied=applied,
        )
        self.history.append(record)
        self.i += 1
        return record

    def _final_record(self, i: int, applied: list[str], start: float) -> RHCStep:
        combined = self.combined_states()
        witness = _monitor(self.enc, combined, resized=True)
        orig = _monitor(self.enc, combined, resized=False)
        return RHCStep(
            step=i,
            time=(i - 1) * self.scenario.dt,
            status="feasible" if witness.value >= 0 else "infeasible-incumbent",
            robustness=witness.value,
            robustness_original=orig.value,
            critical_index=witness.critical_index,
            critical_occurrence=witness.critical_occurrence,
            activations=[],
            plan_states=combined,
            committed_state=None,
            committed_input=None,
            solves=0,
            solve_ms=(time.perf_counter() - start) * 1e3,
            warnings=[],
            events_applied=applied,
        )

    def result(self) -> SynthesisResult:
        if not self.done:
            raise SynthesisError("receding-horizon run not complete")
        states = np.array(self.executed_states)
        inputs = np.array(self.executed_inputs)
        witness = _monitor(self.enc, states, resized=True)
        original = _monitor(self.enc, states, resized=False)
        all_acts = [a for rec in self.history for a in rec.activations]
        weights = self.scenario.R
        objective = float(np.sum(np.abs(inputs) @ weights))
        return SynthesisResult(
            status="feasible" if witness.value >= 0 else "budget-exhausted",
            states=states,
            inputs=inputs,
            objective=objective,
            iterations=len(all_acts),
            activations=all_acts,
            witness_resized=witness,
            witness_original=original,
        )


def synthesize_rhc(
    scn: Scenario,
    events: UpdateFeed = None,
    step_deadline: Optional[float] = None,
    max_solves_per_step: Optional[int] = None,
) -> tuple[list[RHCStep], SynthesisResult]:
    """Run the full receding-horizon loop; returns per-step records + result."""
    runner = RecedingHorizonRunner(
        scn,
        step_deadline=step_deadline,
        max_solves_per_step=max_solves_per_step,
        events=events,
    )
    while not runner.done:
        runner.step()
    return runner.history, runner.result()


def step_event_dict(rec: RHCStep) -> dict:
    """JSON-friendly step event, one line of the structured step log."""
    return {
        "step": rec.step,
        "t": rec.time,
        "status": rec.status,
        "robustness": rec.robustness,
        "robustness_original": rec.robustness_original,
        "critical_index": rec.critical_index,
        "critical_occurrence": rec.critical_occurrence,
        "activations": [list(a) for a in rec.activations],
        "plan": rec.plan_states.tolist() if rec.plan_states is not None else None,
        "committed_state": (
            rec.committed_state.tolist() if rec.committed_state is not None else None
        ),
        "committed_input": (
            rec.committed_input.tolist() if rec.committed_input is not None else None
        ),
        "solves": rec.solves,
        "solve_ms": rec.solve_ms,
        "warnings": rec.warnings,
        "events_applied": rec.events_applied,
    }
